#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "rage/numerics/kernels.hpp"
#include "rage/numerics/tensor.hpp"

namespace rage::numerics {

// Handle to a node of a Graph.
struct Var {
  std::size_t id = 0;
};

// Records a computation over 2-D row-major values and back-propagates a
// scalar loss into the trainable Parameters it touched.
//
// Node values are immutable once produced. A graph built with
// record_gradients = false is a plain evaluator: same kernels, same results,
// no backward closures.
template <typename T>
class Graph {
 public:
  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor<T> value);
  // Refers to an external tensor without copying; it must outlive the graph.
  Var reference(const Tensor<T>& value);
  // Leaf bound to a parameter. Repeated calls with the same parameter return
  // the same node.
  Var parameter(Parameter<T>& param);

  const Tensor<T>& value(Var v) const { return nodes_[v.id].value(); }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Accumulates d(loss)/d(param) into the grad of every trainable parameter
  // reachable from `loss`. Throws kContractViolation for non-scalar loss.
  void backward(Var loss);

  // a[n,k] * b[k,m]
  Var matmul(Var a, Var b);
  // a[n,k] * b[m,k]^T
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  // a[n,m] + bias broadcast over rows
  Var add_row(Var a, Var bias);
  Var scale(Var a, T factor);
  Var one_minus(Var a);
  // g[n,1] * x[n,m], each row scaled by its gate
  Var scale_rows(Var gate, Var x);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var glu(Var a);
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  Var conv1d(Var seq, Var kernel, Var bias, Padding padding);
  Var gather_rows(Var table, std::span<const std::size_t> ids);
  Var concat_cols(std::span<const Var> parts);
  // Sum over rows i of -log_probs[i, targets[i]].
  Var nll(Var log_probs, std::span<const std::size_t> targets);
  Var sum(Var a);

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    std::vector<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    std::function<void(Graph&, std::size_t)> backprop;

    const Tensor<T>& value() const { return external ? *external : owned; }
  };

  Var push(Tensor<T> value, bool requires_grad, std::function<void(Graph&, std::size_t)> backprop);
  bool any_requires(std::initializer_list<Var> inputs) const;
  T* grad_buffer(std::size_t id);
  const T* grad_of(std::size_t id) const { return nodes_[id].grad.data(); }
  const T* data(std::size_t id) const { return nodes_[id].value().data(); }
  Var elementwise(Var a, const std::function<T(T)>& f, const std::function<T(T, T)>& df_from_output);

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace rage::numerics
