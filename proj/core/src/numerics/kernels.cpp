#include "rage/numerics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rage/error.hpp"
#include "rage/numerics/parallel.hpp"

namespace rage::numerics {

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
Tensor<T> glu(const Tensor<T>& x) {
  const std::size_t width = x.cols();
  if (width % 2 != 0) {
    throw Error(ErrorCode::kInvalidShape, "glu input width must be even, got " + std::to_string(width));
  }
  const std::size_t half = width / 2;
  Shape shape = x.shape();
  shape.back() = half;
  if (x.rank() > 2) shape = {x.rows(), half};
  Tensor<T> out(shape);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto dst = out.row(r);
    for (std::size_t i = 0; i < half; ++i) dst[i] = in[i] * sigmoid(in[half + i]);
  }
  return out;
}

template <typename T>
Tensor<T> conv1d_window(const Tensor<T>& seq, const Tensor<T>& kernel, const Tensor<T>& bias, Padding padding) {
  const std::size_t length = seq.rows();
  const std::size_t d_in = seq.cols();
  if (kernel.rank() != 2 || kernel.rows() % d_in != 0) {
    throw Error(ErrorCode::kInvalidShape,
                "conv kernel " + shape_string(kernel.shape()) + " incompatible with input width " + std::to_string(d_in));
  }
  const std::size_t k = kernel.rows() / d_in;
  const std::size_t d_out = kernel.cols();
  if (bias.size() != d_out) throw Error(ErrorCode::kInvalidShape, "conv bias size mismatch");
  const std::size_t padded = length + padding.left + padding.right;
  if (k == 0 || k > padded) {
    throw Error(ErrorCode::kInvalidShape, "conv window " + std::to_string(k) + " exceeds padded length " +
                                              std::to_string(padded));
  }
  Tensor<T> out = Tensor<T>::matrix(padded - k + 1, d_out);
  kernels::conv1d_forward(seq.data(), length, d_in, kernel.data(), k, d_out, bias.data(), padding, out.data());
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& scores) {
  Tensor<T> out(scores.shape());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    kernels::softmax_row(scores.row(r).data(), out.row(r).data(), scores.cols());
  }
  return out;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& scores) {
  Tensor<T> out(scores.shape());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    kernels::log_softmax_row(scores.row(r).data(), out.row(r).data(), scores.cols());
  }
  return out;
}

namespace kernels {

template <typename T>
void matmul_acc(const T* a, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m) {
  parallel_for(Region::kMatMul, 0, n, n * k * m, [=](std::size_t i) {
    T* dst = out + i * m;
    const T* src = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = src[p];
      const T* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += av * brow[j];
    }
  });
}

template <typename T>
void matmul_nt_acc(const T* a, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m) {
  parallel_for(Region::kMatMul, 0, n, n * k * m, [=](std::size_t i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const T* brow = b + j * k;
      T acc{0};
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[i * m + j] += acc;
    }
  });
}

template <typename T>
void matmul_tn_acc(const T* a, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m) {
  // Serial over the reduction index so each output element sums rows in order.
  for (std::size_t i = 0; i < n; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T{0}) continue;
      T* dst = out + p * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += av * brow[j];
    }
  }
}

template <typename T>
void conv1d_forward(const T* seq, std::size_t length, std::size_t d_in, const T* kernel, std::size_t k,
                    std::size_t d_out, const T* bias, Padding padding, T* out) {
  const std::size_t rows = length + padding.left + padding.right - k + 1;
  const std::vector<T> zeros(d_in, T{0});
  // One region for every output position of the layer.
  parallel_for(Region::kConvolution, 0, rows, rows * k * d_in * d_out, [&](std::size_t i) {
    std::vector<T> acc(d_out, T{0});
    for (std::size_t w = 0; w < k; ++w) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + w) - static_cast<std::ptrdiff_t>(padding.left);
      const T* x = (src >= 0 && static_cast<std::size_t>(src) < length) ? seq + src * d_in : zeros.data();
      const T* kw = kernel + w * d_in * d_out;
      for (std::size_t c = 0; c < d_in; ++c) {
        const T xv = x[c];
        const T* krow = kw + c * d_out;
        for (std::size_t o = 0; o < d_out; ++o) acc[o] += xv * krow[o];
      }
    }
    T* dst = out + i * d_out;
    for (std::size_t o = 0; o < d_out; ++o) dst[o] = acc[o] + bias[o];
  });
}

template <typename T>
void conv1d_backward(const T* seq, std::size_t length, std::size_t d_in, const T* kernel, std::size_t k,
                     std::size_t d_out, Padding padding, const T* grad_out, T* grad_seq, T* grad_kernel,
                     T* grad_bias) {
  const std::size_t rows = length + padding.left + padding.right - k + 1;
  for (std::size_t i = 0; i < rows; ++i) {
    const T* g = grad_out + i * d_out;
    if (grad_bias) {
      for (std::size_t o = 0; o < d_out; ++o) grad_bias[o] += g[o];
    }
    for (std::size_t w = 0; w < k; ++w) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + w) - static_cast<std::ptrdiff_t>(padding.left);
      if (src < 0 || static_cast<std::size_t>(src) >= length) continue;
      const T* x = seq + src * d_in;
      const T* kw = kernel + w * d_in * d_out;
      for (std::size_t c = 0; c < d_in; ++c) {
        const T* krow = kw + c * d_out;
        if (grad_kernel) {
          T* gk = grad_kernel + (w * d_in + c) * d_out;
          const T xv = x[c];
          for (std::size_t o = 0; o < d_out; ++o) gk[o] += xv * g[o];
        }
        if (grad_seq) {
          T acc{0};
          for (std::size_t o = 0; o < d_out; ++o) acc += krow[o] * g[o];
          grad_seq[src * d_in + c] += acc;
        }
      }
    }
  }
}

namespace {

template <typename T>
T checked_max(const T* in, std::size_t n) {
  T hi = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(in[i])) throw Error(ErrorCode::kNumericInput, "softmax input is not finite");
    hi = std::max(hi, in[i]);
  }
  return hi;
}

}  // namespace

template <typename T>
void softmax_row(const T* in, T* out, std::size_t n) {
  const T hi = checked_max(in, n);
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - hi);
    total += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= total;
}

template <typename T>
void log_softmax_row(const T* in, T* out, std::size_t n) {
  const T hi = checked_max(in, n);
  T total{0};
  for (std::size_t i = 0; i < n; ++i) total += std::exp(in[i] - hi);
  const T log_total = std::log(total);
  for (std::size_t i = 0; i < n; ++i) out[i] = (in[i] - hi) - log_total;
}

#define RAGE_INSTANTIATE_KERNELS(T)                                                                        \
  template void matmul_acc<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t);             \
  template void matmul_nt_acc<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t);          \
  template void matmul_tn_acc<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t);          \
  template void conv1d_forward<T>(const T*, std::size_t, std::size_t, const T*, std::size_t, std::size_t, \
                                  const T*, Padding, T*);                                                 \
  template void conv1d_backward<T>(const T*, std::size_t, std::size_t, const T*, std::size_t,             \
                                   std::size_t, Padding, const T*, T*, T*, T*);                           \
  template void softmax_row<T>(const T*, T*, std::size_t);                                                \
  template void log_softmax_row<T>(const T*, T*, std::size_t);

RAGE_INSTANTIATE_KERNELS(float)
RAGE_INSTANTIATE_KERNELS(double)
#undef RAGE_INSTANTIATE_KERNELS

}  // namespace kernels

template float sigmoid<float>(float);
template double sigmoid<double>(double);
template Tensor<float> glu(const Tensor<float>&);
template Tensor<double> glu(const Tensor<double>&);
template Tensor<float> conv1d_window(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, Padding);
template Tensor<double> conv1d_window(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, Padding);
template Tensor<float> softmax(const Tensor<float>&);
template Tensor<double> softmax(const Tensor<double>&);
template Tensor<float> log_softmax(const Tensor<float>&);
template Tensor<double> log_softmax(const Tensor<double>&);

}  // namespace rage::numerics
