#include "rage/numerics/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "rage/error.hpp"

namespace rage::numerics {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorCode::kInvalidShape, "tensor shape must have rank >= 1");
  for (auto extent : shape) {
    if (extent == 0) {
      throw Error(ErrorCode::kInvalidShape, "tensor extents must be positive, got " + shape_string(shape));
    }
  }
}

}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(shape_size(shape_), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (shape_size(shape_) != values_.size()) {
    throw Error(ErrorCode::kInvalidShape, "shape " + shape_string(shape_) + " does not match " +
                                              std::to_string(values_.size()) + " values");
  }
}

template <typename T>
std::size_t Tensor<T>::rows() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : shape_[0];
}

template <typename T>
std::size_t Tensor<T>::cols() const noexcept {
  if (shape_.empty()) return 0;
  if (shape_.size() == 1) return shape_[0];
  std::size_t c = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
  return c;
}

template <typename T>
std::span<T> Tensor<T>::grad() {
  if (grad_.size() != values_.size()) grad_.assign(values_.size(), T{0});
  return grad_;
}

template <typename T>
void Tensor<T>::zero_grad() {
  grad_.assign(values_.size(), T{0});
}

template <typename T>
Parameter<T>& ParameterSet<T>::add(std::string name, Tensor<T> tensor, bool trainable) {
  if (index_.contains(name)) {
    throw Error(ErrorCode::kContractViolation, "duplicate parameter name: " + name);
  }
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter<T>>(Parameter<T>{std::move(name), std::move(tensor), trainable}));
  return *params_.back();
}

template <typename T>
Parameter<T>* ParameterSet<T>::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

template <typename T>
const Parameter<T>* ParameterSet<T>::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

template <typename T>
Parameter<T>& ParameterSet<T>::at(const std::string& name) {
  if (auto* p = find(name)) return *p;
  throw Error(ErrorCode::kContractViolation, "unknown parameter: " + name);
}

template <typename T>
const Parameter<T>& ParameterSet<T>::at(const std::string& name) const {
  if (const auto* p = find(name)) return *p;
  throw Error(ErrorCode::kContractViolation, "unknown parameter: " + name);
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (!trainable_only || p->trainable) n += p->tensor.size();
  }
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grads() {
  for (auto& p : params_) {
    if (p->trainable) p->tensor.zero_grad();
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace rage::numerics
