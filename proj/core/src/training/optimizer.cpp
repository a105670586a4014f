#include "rage/training/optimizer.hpp"

#include <cmath>

#include "rage/error.hpp"

namespace rage::training {

template <typename T>
void nesterov_update(std::span<T> theta, std::span<const T> grad, std::span<T> velocity, T lr, T momentum) {
  if (theta.size() != grad.size() || theta.size() != velocity.size()) {
    throw Error(ErrorCode::kInvalidShape, "optimizer buffers differ in size");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * grad[i];
    theta[i] += momentum * velocity[i] - lr * grad[i];
  }
}

template <typename T>
void Nesterov<T>::step(numerics::ParameterSet<T>& params) {
  for (auto& p : params) {
    if (!p->trainable || !p->tensor.has_grad()) continue;
    auto& v = velocity_[p->name];
    if (v.size() != p->tensor.size()) v.assign(p->tensor.size(), T{0});
    const auto& tensor = p->tensor;
    nesterov_update<T>(p->tensor.values(), tensor.grad(), v, lr_, momentum_);
  }
}

template <typename T>
const std::vector<T>* Nesterov<T>::velocity(const std::string& name) const {
  auto it = velocity_.find(name);
  return it == velocity_.end() ? nullptr : &it->second;
}

template <typename T>
double l2_penalty(const numerics::ParameterSet<T>& params, double coeff) {
  double total = 0.0;
  for (const auto& p : params) {
    if (!p->trainable) continue;
    for (T v : p->tensor.values()) total += static_cast<double>(v) * static_cast<double>(v);
  }
  return coeff * total;
}

template <typename T>
void add_l2_gradient(numerics::ParameterSet<T>& params, double coeff) {
  if (coeff == 0.0) return;
  const T factor = static_cast<T>(2.0 * coeff);
  for (auto& p : params) {
    if (!p->trainable) continue;
    auto grad = p->tensor.grad();
    auto values = p->tensor.values();
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += factor * values[i];
  }
}

template <typename T>
double gradient_norm(const numerics::ParameterSet<T>& params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (!p->trainable) continue;
    for (T g : p->tensor.grad()) total += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(total);
}

template <typename T>
double clip_gradients(numerics::ParameterSet<T>& params, double max_norm) {
  const double norm = gradient_norm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (!p->trainable || !p->tensor.has_grad()) continue;
      for (auto& g : p->tensor.grad()) g *= factor;
    }
  }
  return norm;
}

#define RAGE_INSTANTIATE_OPTIMIZER(T)                                                                 \
  template void nesterov_update<T>(std::span<T>, std::span<const T>, std::span<T>, T, T);             \
  template class Nesterov<T>;                                                                         \
  template double l2_penalty(const numerics::ParameterSet<T>&, double);                               \
  template void add_l2_gradient(numerics::ParameterSet<T>&, double);                                  \
  template double gradient_norm(const numerics::ParameterSet<T>&);                                    \
  template double clip_gradients(numerics::ParameterSet<T>&, double);

RAGE_INSTANTIATE_OPTIMIZER(float)
RAGE_INSTANTIATE_OPTIMIZER(double)
#undef RAGE_INSTANTIATE_OPTIMIZER

}  // namespace rage::training
