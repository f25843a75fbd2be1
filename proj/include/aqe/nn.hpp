#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aqe/rng.hpp"
#include "aqe/tensor.hpp"

namespace aqe::nn {

using TensorVisitor = std::function<void(const std::string& name, Matrix& tensor)>;
using ConstTensorVisitor = std::function<void(const std::string& name, const Matrix& tensor)>;

/// Fixed sinusoidal position signal, rows = positions.
Matrix positional_encoding(std::size_t length, std::size_t dim);
/// Adds the position signal of one position to x.
void add_position(std::span<double> x, std::size_t pos);

double gelu(double x);
double gelu_grad(double x);

/// Fills with N(0, scale^2) draws.
void init_normal(Matrix& m, Rng& rng, double scale);

void add_in_place(Matrix& dst, const Matrix& src);

/// Multi-head scaled dot-product attention with output projection, all maps d x d.
struct AttentionParams {
  Matrix wq, wk, wv, wo;

  AttentionParams() = default;
  explicit AttentionParams(std::size_t dim);
  void visit(const std::string& prefix, const TensorVisitor& f);
  void visit(const std::string& prefix, const ConstTensorVisitor& f) const;
};

struct AttentionCache {
  Matrix query_in, key_in, value_in;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // one Tq x Tk matrix per head
  Matrix context;
  std::size_t heads = 1;
};

/// out = concat_h(softmax(Q_h K_h^T / sqrt(d_h)) V_h) Wo with Q = query_in Wq,
/// K = key_in Wk, V = value_in Wv. With causal set, query i only sees keys <= i.
Matrix attention_forward(const AttentionParams& p, std::size_t heads, const Matrix& query_in,
                         const Matrix& key_in, const Matrix& value_in, bool causal,
                         AttentionCache& cache);

/// Accumulates parameter gradients into g and input gradients into the d* outputs
/// (which must be pre-sized).
void attention_backward(const AttentionParams& p, AttentionParams& g, const AttentionCache& cache,
                        const Matrix& d_out, Matrix& d_query_in, Matrix& d_key_in,
                        Matrix& d_value_in);

/// Position-wise d -> hidden -> d with GELU.
struct FeedForwardParams {
  Matrix w1, b1, w2, b2;

  FeedForwardParams() = default;
  FeedForwardParams(std::size_t dim, std::size_t hidden);
  void visit(const std::string& prefix, const TensorVisitor& f);
  void visit(const std::string& prefix, const ConstTensorVisitor& f) const;
};

struct FeedForwardCache {
  Matrix input, pre, act;
};

Matrix feed_forward(const FeedForwardParams& p, const Matrix& x, FeedForwardCache& cache);
void feed_forward_backward(const FeedForwardParams& p, FeedForwardParams& g,
                           const FeedForwardCache& cache, const Matrix& d_out, Matrix& d_in);

}  // namespace aqe::nn
