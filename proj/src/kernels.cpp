#include "aqe/kernels.hpp"

#include <limits>
#include <stdexcept>

#include <omp.h>

namespace aqe::kernels {

namespace {

struct Shape {
  std::size_t m, k, n;
};

Shape check_shapes(const Matrix& c, const Matrix& a, Trans ta, const Matrix& b, Trans tb) {
  const std::size_t m = ta == Trans::No ? a.rows() : a.cols();
  const std::size_t k = ta == Trans::No ? a.cols() : a.rows();
  const std::size_t kb = tb == Trans::No ? b.rows() : b.cols();
  const std::size_t n = tb == Trans::No ? b.cols() : b.rows();
  if (k != kb || c.rows() != m || c.cols() != n) throw std::invalid_argument("gemm: shape mismatch");
  return {m, k, n};
}

// Computes rows [begin, end) of C. The inner loops run k in ascending order
// for every (i, j), matching the reference summation order.
void gemm_rows(Matrix& c, const Matrix& a, Trans ta, const Matrix& b, Trans tb, const Shape& s,
               std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    double* out = c.row(i).data();
    if (tb == Trans::No) {
      for (std::size_t p = 0; p < s.k; ++p) {
        const double av = ta == Trans::No ? a(i, p) : a(p, i);
        if (av == 0.0) continue;
        const double* brow = b.row(p).data();
        for (std::size_t j = 0; j < s.n; ++j) out[j] += av * brow[j];
      }
    } else {
      for (std::size_t j = 0; j < s.n; ++j) {
        const double* brow = b.row(j).data();
        double acc = out[j];
        if (ta == Trans::No) {
          const double* arow = a.row(i).data();
          for (std::size_t p = 0; p < s.k; ++p) acc += arow[p] * brow[p];
        } else {
          for (std::size_t p = 0; p < s.k; ++p) acc += a(p, i) * brow[p];
        }
        out[j] = acc;
      }
    }
  }
}

}  // namespace

void gemm(Matrix& c, const Matrix& a, Trans ta, const Matrix& b, Trans tb, bool accumulate) {
  const Shape s = check_shapes(c, a, ta, b, tb);
  if (!accumulate) c.fill(0.0);
  const std::size_t work = s.m * s.k * s.n;
  if (work < kParallelThreshold || s.m < 2 || omp_get_max_threads() == 1 || omp_in_parallel()) {
    gemm_rows(c, a, ta, b, tb, s, 0, s.m);
    return;
  }
  const long rows = static_cast<long>(s.m);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    gemm_rows(c, a, ta, b, tb, s, static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1);
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  gemm(c, a, Trans::No, b, Trans::No);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  gemm(c, a, Trans::No, b, Trans::Yes);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  gemm(c, a, Trans::Yes, b, Trans::No);
  return c;
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : row) peak = std::max(peak, v);
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
}

namespace reference {

void gemm(Matrix& c, const Matrix& a, Trans ta, const Matrix& b, Trans tb, bool accumulate) {
  const Shape s = check_shapes(c, a, ta, b, tb);
  for (std::size_t i = 0; i < s.m; ++i) {
    for (std::size_t j = 0; j < s.n; ++j) {
      double acc = accumulate ? c(i, j) : 0.0;
      for (std::size_t p = 0; p < s.k; ++p) {
        const double av = ta == Trans::No ? a(i, p) : a(p, i);
        const double bv = tb == Trans::No ? b(p, j) : b(j, p);
        acc += av * bv;
      }
      c(i, j) = acc;
    }
  }
}

}  // namespace reference

}  // namespace aqe::kernels
