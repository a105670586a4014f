#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rage/numerics/tensor.hpp"

namespace rage::training {

/// Nesterov momentum in look-ahead form, one parameter array at a time:
///   v <- mu v - lr g
///   theta <- theta + mu v - lr g      (v already updated)
/// With mu = 0 this is theta <- theta - lr g.
template <typename T>
void nesterov_update(std::span<T> theta, std::span<const T> grad, std::span<T> velocity, T lr, T momentum);

// Applies nesterov_update to every trainable parameter, keeping one velocity
// buffer per parameter name.
template <typename T>
class Nesterov {
 public:
  Nesterov(T lr, T momentum) : lr_(lr), momentum_(momentum) {}

  void step(numerics::ParameterSet<T>& params);

  T lr() const noexcept { return lr_; }
  T momentum() const noexcept { return momentum_; }
  const std::vector<T>* velocity(const std::string& name) const;

 private:
  T lr_;
  T momentum_;
  std::unordered_map<std::string, std::vector<T>> velocity_;
};

// coeff * sum of squares over trainable parameters (no 1/2 factor).
template <typename T>
double l2_penalty(const numerics::ParameterSet<T>& params, double coeff);
// Adds the penalty gradient 2 * coeff * theta to every trainable parameter.
template <typename T>
void add_l2_gradient(numerics::ParameterSet<T>& params, double coeff);

template <typename T>
double gradient_norm(const numerics::ParameterSet<T>& params);
// Rescales all trainable gradients so their global L2 norm is at most
// max_norm. Returns the norm before clipping.
template <typename T>
double clip_gradients(numerics::ParameterSet<T>& params, double max_norm);

}  // namespace rage::training
