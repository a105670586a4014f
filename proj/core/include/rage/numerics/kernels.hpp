#pragma once

#include <cstddef>

#include "rage/numerics/tensor.hpp"

namespace rage::numerics {

// Zero rows added before and after a sequence ahead of a windowed convolution.
struct Padding {
  std::size_t left = 0;
  std::size_t right = 0;
};

// Centered window of width k: for even k the window covering position i is
// i-k/2+1 .. i+k/2.
constexpr Padding centered_padding(std::size_t k) { return {(k - 1) / 2, k / 2}; }
// Causal window of width k: positions i-k+1 .. i.
constexpr Padding causal_padding(std::size_t k) { return {k - 1, 0}; }

template <typename T>
T sigmoid(T x);

/// Gated linear unit applied row-wise: each row [a, b] of width 2d becomes
/// a * sigmoid(b) of width d. Throws kInvalidShape on odd width.
template <typename T>
Tensor<T> glu(const Tensor<T>& x);

/// Windowed 1-D convolution over a sequence of row vectors.
///
/// `seq` is [L, d_in], `kernel` is [k * d_in, d_out] (window rows stacked
/// oldest first), `bias` has d_out entries. Output row i is
/// concat(padded[i .. i+k-1]) * kernel + bias, giving L + left + right - k + 1
/// rows. Throws kInvalidShape when that count is not positive.
template <typename T>
Tensor<T> conv1d_window(const Tensor<T>& seq, const Tensor<T>& kernel, const Tensor<T>& bias, Padding padding);

/// Row-wise softmax with max subtraction. Throws kNumericInput on NaN/inf.
template <typename T>
Tensor<T> softmax(const Tensor<T>& scores);

/// Row-wise log-softmax. Throws kNumericInput on NaN/inf.
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& scores);

namespace kernels {

// Raw row-major kernels. Every "acc" kernel adds into `out`; each output
// element is accumulated in a fixed order that does not depend on how many
// rows are processed, so a single row computed alone is bit-identical to the
// same row computed inside a larger batch.

// out[n,m] += a[n,k] * b[k,m]
template <typename T>
void matmul_acc(const T* a, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m);
// out[n,m] += a[n,k] * b[m,k]^T
template <typename T>
void matmul_nt_acc(const T* a, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m);
// out[k,m] += a[n,k]^T * b[n,m]
template <typename T>
void matmul_tn_acc(const T* a, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m);

// out[rows_out, d_out] = conv(seq) as documented on conv1d_window.
template <typename T>
void conv1d_forward(const T* seq, std::size_t length, std::size_t d_in, const T* kernel, std::size_t k,
                    std::size_t d_out, const T* bias, Padding padding, T* out);
template <typename T>
void conv1d_backward(const T* seq, std::size_t length, std::size_t d_in, const T* kernel, std::size_t k,
                     std::size_t d_out, Padding padding, const T* grad_out, T* grad_seq, T* grad_kernel,
                     T* grad_bias);

template <typename T>
void softmax_row(const T* in, T* out, std::size_t n);
template <typename T>
void log_softmax_row(const T* in, T* out, std::size_t n);

}  // namespace kernels

}  // namespace rage::numerics
