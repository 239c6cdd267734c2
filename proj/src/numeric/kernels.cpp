#include "tokd/numeric/kernels.hpp"

#include <algorithm>

namespace tokd::kernels {

// Shapes below this many multiply-adds run on the calling thread.
constexpr std::size_t kParallelWork = 1u << 15;

namespace serial {

// C[m,n] = A[m,k] * B[k,n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

// C[m,n] = A[m,k] * B[n,k]^T
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
  }
}

// C[k,n] = A[m,k]^T * B[m,n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < m; ++p) acc += a[p * k + i] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void add_row_bias(std::size_t rows, std::size_t cols, const T* bias, T* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias[c];
}

template <typename T>
void column_sums(std::size_t rows, std::size_t cols, const T* grad, T* bias_grad) {
  for (std::size_t c = 0; c < cols; ++c) {
    T acc = bias_grad[c];
    for (std::size_t r = 0; r < rows; ++r) acc += grad[r * cols + c];
    bias_grad[c] = acc;
  }
}

}  // namespace serial

namespace parallel {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * n * k >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    T* __restrict crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* __restrict brow = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * n * k >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const T* __restrict arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* __restrict brow = b + j * k;
      T acc = T(0);
#pragma omp simd reduction(+ : acc)
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  const auto out_rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static) if (m * n * k >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < out_rows; ++i) {
    T* __restrict crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    for (std::size_t p = 0; p < m; ++p) {
      const T av = a[p * k + i];
      const T* __restrict brow = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void add_row_bias(std::size_t rows, std::size_t cols, const T* bias, T* out) {
  const auto nrows = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < nrows; ++r) {
    T* __restrict row = out + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) row[c] += bias[c];
  }
}

template <typename T>
void column_sums(std::size_t rows, std::size_t cols, const T* grad, T* bias_grad) {
  // Row-at-a-time keeps the per-column order identical to the serial loop.
  for (std::size_t r = 0; r < rows; ++r) {
    const T* __restrict row = grad + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) bias_grad[c] += row[c];
  }
}

}  // namespace parallel

#define TOKD_INSTANTIATE_KERNELS(NS, T)                                                          \
  template void NS::gemm_nn<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool); \
  template void NS::gemm_nt<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool); \
  template void NS::gemm_tn<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool); \
  template void NS::add_row_bias<T>(std::size_t, std::size_t, const T*, T*);                     \
  template void NS::column_sums<T>(std::size_t, std::size_t, const T*, T*);

TOKD_INSTANTIATE_KERNELS(serial, float)
TOKD_INSTANTIATE_KERNELS(serial, double)
TOKD_INSTANTIATE_KERNELS(parallel, float)
TOKD_INSTANTIATE_KERNELS(parallel, double)

#undef TOKD_INSTANTIATE_KERNELS

}  // namespace tokd::kernels
