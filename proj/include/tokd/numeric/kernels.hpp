#pragma once

#include <cstddef>

// Dense matrix kernels behind the autodiff ops.
//
// `serial` is the straightforward triple loop kept as the reference for tests
// and the benchmark. `parallel` splits output rows across OpenMP threads and
// vectorizes the inner loop. Every output element is produced by exactly one
// thread with a fixed summation order, so parallel results do not depend on
// the thread count.
//
// Naming follows BLAS: nn = A * B, nt = A * B^T, tn = A^T * B.
// All matrices are row-major and densely packed. When `accumulate` is false the
// destination is overwritten.

namespace tokd::kernels {

namespace serial {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);

/// out[r, :] += bias for every row.
template <typename T>
void add_row_bias(std::size_t rows, std::size_t cols, const T* bias, T* out);
/// bias_grad += column sums of grad.
template <typename T>
void column_sums(std::size_t rows, std::size_t cols, const T* grad, T* bias_grad);

}  // namespace serial

namespace parallel {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);

template <typename T>
void add_row_bias(std::size_t rows, std::size_t cols, const T* bias, T* out);
template <typename T>
void column_sums(std::size_t rows, std::size_t cols, const T* grad, T* bias_grad);

}  // namespace parallel

}  // namespace tokd::kernels
