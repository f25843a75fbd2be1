#pragma once

#include "aqe/tensor.hpp"

namespace aqe::kernels {

enum class Trans { No, Yes };

/// C = op(A) * op(B), or C += ... when accumulate is set. C must already have
/// the result shape. Rows of C are distributed over OpenMP threads once the
/// product is large enough; each element is summed in the same k order on
/// every thread count, so results do not depend on the thread count.
void gemm(Matrix& c, const Matrix& a, Trans ta, const Matrix& b, Trans tb, bool accumulate = false);

/// Convenience wrappers allocating the result.
Matrix matmul(const Matrix& a, const Matrix& b);     // A * B
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // A * B^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // A^T * B

/// Row-wise softmax, in place. Rows are shifted by their max first.
void softmax_rows(Matrix& m);

/// Multiply-add flop count below which gemm stays on one thread.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

namespace reference {

/// Naive triple loop kept as the oracle for gemm.
void gemm(Matrix& c, const Matrix& a, Trans ta, const Matrix& b, Trans tb, bool accumulate = false);

}  // namespace reference

}  // namespace aqe::kernels
