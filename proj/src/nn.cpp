#include "aqe/nn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "aqe/kernels.hpp"

namespace aqe::nn {

using kernels::gemm;
using kernels::Trans;

void add_position(std::span<double> x, std::size_t pos) {
  const std::size_t dim = x.size();
  for (std::size_t i = 0; i < dim; ++i) {
    const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
    const double angle = static_cast<double>(pos) * rate;
    x[i] += (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
}

Matrix positional_encoding(std::size_t length, std::size_t dim) {
  Matrix pe(length, dim);
  for (std::size_t pos = 0; pos < length; ++pos) add_position(pe.row(pos), pos);
  return pe;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

void init_normal(Matrix& m, Rng& rng, double scale) {
  for (double& v : m.flat()) v = rng.normal() * scale;
}

void add_in_place(Matrix& dst, const Matrix& src) {
  if (!dst.same_shape(src)) throw std::invalid_argument("add_in_place: shape mismatch");
  auto d = dst.flat();
  auto s = src.flat();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

AttentionParams::AttentionParams(std::size_t dim)
    : wq(dim, dim), wk(dim, dim), wv(dim, dim), wo(dim, dim) {}

void AttentionParams::visit(const std::string& prefix, const TensorVisitor& f) {
  f(prefix + ".wq", wq);
  f(prefix + ".wk", wk);
  f(prefix + ".wv", wv);
  f(prefix + ".wo", wo);
}

void AttentionParams::visit(const std::string& prefix, const ConstTensorVisitor& f) const {
  f(prefix + ".wq", wq);
  f(prefix + ".wk", wk);
  f(prefix + ".wv", wv);
  f(prefix + ".wo", wo);
}

Matrix attention_forward(const AttentionParams& p, std::size_t heads, const Matrix& query_in,
                         const Matrix& key_in, const Matrix& value_in, bool causal,
                         AttentionCache& cache) {
  const std::size_t dim = p.wq.rows();
  if (heads == 0 || dim % heads != 0) throw std::invalid_argument("attention: heads must divide dim");
  const std::size_t tq = query_in.rows();
  const std::size_t tk = key_in.rows();
  const std::size_t dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.query_in = query_in;
  cache.key_in = key_in;
  cache.value_in = value_in;
  cache.heads = heads;
  cache.q = kernels::matmul(query_in, p.wq);
  cache.k = kernels::matmul(key_in, p.wk);
  cache.v = kernels::matmul(value_in, p.wv);
  cache.probs.assign(heads, Matrix(tq, tk));
  cache.context.resize(tq, dim);

  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t c0 = h * dh;
    Matrix& probs = cache.probs[h];
    for (std::size_t i = 0; i < tq; ++i) {
      const double* qi = cache.q.row(i).data() + c0;
      for (std::size_t j = 0; j < tk; ++j) {
        if (causal && j > i) {
          probs(i, j) = -std::numeric_limits<double>::infinity();
          continue;
        }
        const double* kj = cache.k.row(j).data() + c0;
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
        probs(i, j) = s * scale;
      }
    }
    kernels::softmax_rows(probs);
    for (std::size_t i = 0; i < tq; ++i) {
      double* ctx = cache.context.row(i).data() + c0;
      for (std::size_t j = 0; j < tk; ++j) {
        const double w = probs(i, j);
        if (w == 0.0) continue;
        const double* vj = cache.v.row(j).data() + c0;
        for (std::size_t c = 0; c < dh; ++c) ctx[c] += w * vj[c];
      }
    }
  }
  return kernels::matmul(cache.context, p.wo);
}

void attention_backward(const AttentionParams& p, AttentionParams& g, const AttentionCache& cache,
                        const Matrix& d_out, Matrix& d_query_in, Matrix& d_key_in,
                        Matrix& d_value_in) {
  const std::size_t dim = p.wq.rows();
  const std::size_t heads = cache.heads;
  const std::size_t dh = dim / heads;
  const std::size_t tq = cache.q.rows();
  const std::size_t tk = cache.k.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  gemm(g.wo, cache.context, Trans::Yes, d_out, Trans::No, true);
  const Matrix d_ctx = kernels::matmul_nt(d_out, p.wo);

  Matrix dq(tq, dim), dk(tk, dim), dv(tk, dim);
  Matrix d_probs(tq, tk);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t c0 = h * dh;
    const Matrix& probs = cache.probs[h];
    for (std::size_t i = 0; i < tq; ++i) {
      const double* dci = d_ctx.row(i).data() + c0;
      double weighted = 0.0;
      for (std::size_t j = 0; j < tk; ++j) {
        const double w = probs(i, j);
        const double* vj = cache.v.row(j).data() + c0;
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += dci[c] * vj[c];
        d_probs(i, j) = s;
        weighted += w * s;
        if (w != 0.0) {
          double* dvj = dv.row(j).data() + c0;
          for (std::size_t c = 0; c < dh; ++c) dvj[c] += w * dci[c];
        }
      }
      const double* qi = cache.q.row(i).data() + c0;
      double* dqi = dq.row(i).data() + c0;
      for (std::size_t j = 0; j < tk; ++j) {
        const double w = probs(i, j);
        if (w == 0.0) continue;
        const double ds = w * (d_probs(i, j) - weighted) * scale;
        const double* kj = cache.k.row(j).data() + c0;
        double* dkj = dk.row(j).data() + c0;
        for (std::size_t c = 0; c < dh; ++c) {
          dqi[c] += ds * kj[c];
          dkj[c] += ds * qi[c];
        }
      }
    }
  }

  gemm(g.wq, cache.query_in, Trans::Yes, dq, Trans::No, true);
  gemm(g.wk, cache.key_in, Trans::Yes, dk, Trans::No, true);
  gemm(g.wv, cache.value_in, Trans::Yes, dv, Trans::No, true);
  gemm(d_query_in, dq, Trans::No, p.wq, Trans::Yes, true);
  gemm(d_key_in, dk, Trans::No, p.wk, Trans::Yes, true);
  gemm(d_value_in, dv, Trans::No, p.wv, Trans::Yes, true);
}

FeedForwardParams::FeedForwardParams(std::size_t dim, std::size_t hidden)
    : w1(dim, hidden), b1(1, hidden), w2(hidden, dim), b2(1, dim) {}

void FeedForwardParams::visit(const std::string& prefix, const TensorVisitor& f) {
  f(prefix + ".w1", w1);
  f(prefix + ".b1", b1);
  f(prefix + ".w2", w2);
  f(prefix + ".b2", b2);
}

void FeedForwardParams::visit(const std::string& prefix, const ConstTensorVisitor& f) const {
  f(prefix + ".w1", w1);
  f(prefix + ".b1", b1);
  f(prefix + ".w2", w2);
  f(prefix + ".b2", b2);
}

Matrix feed_forward(const FeedForwardParams& p, const Matrix& x, FeedForwardCache& cache) {
  cache.input = x;
  cache.pre = kernels::matmul(x, p.w1);
  for (std::size_t r = 0; r < cache.pre.rows(); ++r) {
    auto row = cache.pre.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += p.b1(0, c);
  }
  cache.act = cache.pre;
  for (double& v : cache.act.flat()) v = gelu(v);
  Matrix out = kernels::matmul(cache.act, p.w2);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += p.b2(0, c);
  }
  return out;
}

void feed_forward_backward(const FeedForwardParams& p, FeedForwardParams& g,
                           const FeedForwardCache& cache, const Matrix& d_out, Matrix& d_in) {
  gemm(g.w2, cache.act, Trans::Yes, d_out, Trans::No, true);
  for (std::size_t r = 0; r < d_out.rows(); ++r) {
    for (std::size_t c = 0; c < d_out.cols(); ++c) g.b2(0, c) += d_out(r, c);
  }
  Matrix d_pre = kernels::matmul_nt(d_out, p.w2);
  auto dp = d_pre.flat();
  auto pre = cache.pre.flat();
  for (std::size_t i = 0; i < dp.size(); ++i) dp[i] *= gelu_grad(pre[i]);
  gemm(g.w1, cache.input, Trans::Yes, d_pre, Trans::No, true);
  for (std::size_t r = 0; r < d_pre.rows(); ++r) {
    for (std::size_t c = 0; c < d_pre.cols(); ++c) g.b1(0, c) += d_pre(r, c);
  }
  gemm(d_in, d_pre, Trans::No, p.w1, Trans::Yes, true);
}

}  // namespace aqe::nn
