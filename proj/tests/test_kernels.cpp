#include <gtest/gtest.h>

#include <cmath>

#include "aqe/kernels.hpp"
#include "aqe/nn.hpp"
#include "generators.hpp"

namespace aqe {
namespace {

using kernels::Trans;

Matrix random_matrix(testing::Gen& gen, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.flat()) v = u(gen.engine());
  return m;
}

// Plain dot products, written independently of both gemm variants.
Matrix oracle(const Matrix& a, Trans ta, const Matrix& b, Trans tb) {
  const std::size_t m = ta == Trans::No ? a.rows() : a.cols();
  const std::size_t k = ta == Trans::No ? a.cols() : a.rows();
  const std::size_t n = tb == Trans::No ? b.cols() : b.rows();
  Matrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t p = 0; p < k; ++p) {
        const double x = ta == Trans::No ? a(i, p) : a(p, i);
        const double y = tb == Trans::No ? b(p, j) : b(j, p);
        s += static_cast<long double>(x) * y;
      }
      c(i, j) = static_cast<double>(s);
    }
  }
  return c;
}

void expect_near(const Matrix& a, const Matrix& b, double tol) {
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.flat()[i], b.flat()[i], tol);
}

TEST(Gemm, AllTransposeCombinations) {
  testing::Gen gen(1);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = static_cast<std::size_t>(gen.range(1, 9));
    const auto k = static_cast<std::size_t>(gen.range(1, 9));
    const auto n = static_cast<std::size_t>(gen.range(1, 9));
    for (Trans ta : {Trans::No, Trans::Yes}) {
      for (Trans tb : {Trans::No, Trans::Yes}) {
        const Matrix a = ta == Trans::No ? random_matrix(gen, m, k) : random_matrix(gen, k, m);
        const Matrix b = tb == Trans::No ? random_matrix(gen, k, n) : random_matrix(gen, n, k);
        Matrix c(m, n), r(m, n);
        kernels::gemm(c, a, ta, b, tb);
        kernels::reference::gemm(r, a, ta, b, tb);
        const Matrix o = oracle(a, ta, b, tb);
        expect_near(c, o, 1e-12);
        expect_near(r, o, 1e-12);
      }
    }
  }
}

TEST(Gemm, AccumulateAddsToExisting) {
  testing::Gen gen(2);
  const Matrix a = random_matrix(gen, 5, 7), b = random_matrix(gen, 7, 3);
  Matrix c = random_matrix(gen, 5, 3);
  const Matrix before = c;
  kernels::gemm(c, a, Trans::No, b, Trans::No, true);
  const Matrix product = oracle(a, Trans::No, b, Trans::No);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(c.flat()[i], before.flat()[i] + product.flat()[i], 1e-12);
  }
}

TEST(Gemm, ParallelPathMatchesReferenceExactly) {
  testing::Gen gen(3);
  for (std::size_t size : {48u, 64u, 97u}) {
    ASSERT_GE(size * size * size, kernels::kParallelThreshold / 2);
    for (Trans ta : {Trans::No, Trans::Yes}) {
      for (Trans tb : {Trans::No, Trans::Yes}) {
        const Matrix a = random_matrix(gen, size, size), b = random_matrix(gen, size, size);
        Matrix c(size, size), r(size, size);
        kernels::gemm(c, a, ta, b, tb);
        kernels::reference::gemm(r, a, ta, b, tb);
        EXPECT_EQ(c, r);
      }
    }
  }
}

TEST(Gemm, Wrappers) {
  testing::Gen gen(4);
  const Matrix a = random_matrix(gen, 4, 6), b = random_matrix(gen, 6, 5), bt = random_matrix(gen, 5, 6),
               at = random_matrix(gen, 6, 4);
  expect_near(kernels::matmul(a, b), oracle(a, Trans::No, b, Trans::No), 1e-12);
  expect_near(kernels::matmul_nt(a, bt), oracle(a, Trans::No, bt, Trans::Yes), 1e-12);
  expect_near(kernels::matmul_tn(at, b), oracle(at, Trans::Yes, b, Trans::No), 1e-12);
}

TEST(Softmax, RowsSumToOneAndMatchDefinition) {
  testing::Gen gen(5);
  Matrix m = random_matrix(gen, 6, 9);
  for (double& v : m.flat()) v *= 50.0;
  const Matrix raw = m;
  kernels::softmax_rows(m);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double mx = raw(r, 0);
    for (std::size_t c = 0; c < m.cols(); ++c) mx = std::max(mx, raw(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) z += std::exp(raw(r, c) - mx);
    double total = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      EXPECT_NEAR(m(r, c), std::exp(raw(r, c) - mx) / z, 1e-14);
      total += m(r, c);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, LargeInputsStayFinite) {
  Matrix m(1, 3);
  m(0, 0) = 1000.0;
  m(0, 1) = 1000.0;
  m(0, 2) = -1000.0;
  kernels::softmax_rows(m);
  EXPECT_NEAR(m(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(m(0, 2), 0.0, 1e-15);
}

TEST(Gelu, DerivativeMatchesFiniteDifference) {
  for (double x = -4.0; x <= 4.0; x += 0.37) {
    const double h = 1e-6;
    const double fd = (nn::gelu(x + h) - nn::gelu(x - h)) / (2 * h);
    EXPECT_NEAR(nn::gelu_grad(x), fd, 1e-7);
  }
  EXPECT_EQ(nn::gelu(0.0), 0.0);
}

TEST(Positions, AddPositionMatchesTableRow) {
  const Matrix table = nn::positional_encoding(12, 10);
  for (std::size_t pos = 0; pos < 12; ++pos) {
    std::vector<double> row(10, 0.0);
    nn::add_position(row, pos);
    for (std::size_t c = 0; c < 10; ++c) EXPECT_DOUBLE_EQ(row[c], table(pos, c));
  }
  EXPECT_DOUBLE_EQ(table(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(table(0, 1), 1.0);
}

}  // namespace
}  // namespace aqe
