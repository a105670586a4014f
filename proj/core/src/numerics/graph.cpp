#include "rage/numerics/graph.hpp"

#include <cmath>

#include "rage/error.hpp"

namespace rage::numerics {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidShape, what);
}

template <typename T>
Tensor<T> as_matrix(Tensor<T> t) {
  if (t.rank() == 2) return t;
  const std::size_t r = t.rows(), c = t.cols();
  return Tensor<T>({r, c}, std::vector<T>(t.values().begin(), t.values().end()));
}

}  // namespace

template <typename T>
Var Graph<T>::push(Tensor<T> value, bool requires_grad, std::function<void(Graph&, std::size_t)> backprop) {
  Node node;
  node.owned = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
bool Graph<T>::any_requires(std::initializer_list<Var> inputs) const {
  for (auto v : inputs) {
    if (nodes_[v.id].requires_grad) return true;
  }
  return false;
}

template <typename T>
T* Graph<T>::grad_buffer(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value().size(), T{0});
  return node.grad.data();
}

template <typename T>
Var Graph<T>::constant(Tensor<T> value) {
  return push(as_matrix(std::move(value)), false, nullptr);
}

template <typename T>
Var Graph<T>::reference(const Tensor<T>& value) {
  if (value.rank() != 2) return constant(value);
  Node node;
  node.external = &value;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Graph<T>::parameter(Parameter<T>& param) {
  if (auto it = param_nodes_.find(&param); it != param_nodes_.end()) return Var{it->second};
  if (param.tensor.rank() != 2) {
    throw Error(ErrorCode::kInvalidShape, "parameter " + param.name + " must be a matrix");
  }
  Node node;
  node.external = &param.tensor;
  node.param = &param;
  node.requires_grad = record_ && param.trainable;
  if (node.requires_grad) {
    node.backprop = [](Graph& g, std::size_t self) {
      auto& n = g.nodes_[self];
      auto dst = n.param->tensor.grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
    };
  }
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&param, nodes_.size() - 1);
  return Var{nodes_.size() - 1};
}

template <typename T>
void Graph<T>::backward(Var loss) {
  if (!record_) throw Error(ErrorCode::kContractViolation, "backward on a graph built without gradients");
  if (value(loss).size() != 1) {
    throw Error(ErrorCode::kContractViolation, "backward requires a scalar loss, got shape " +
                                                   shape_string(value(loss).shape()));
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)[0] += T{1};
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    auto& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty() || !node.backprop) continue;
    node.backprop(*this, id);
  }
}

template <typename T>
Var Graph<T>::matmul(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  require(bv.rows() == k, "matmul: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  auto out = Tensor<T>::matrix(n, m);
  kernels::matmul_acc(av.data(), bv.data(), out.data(), n, k, m);
  return push(std::move(out), any_requires({a, b}), [a, b, n, k, m](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    if (g.nodes_[a.id].requires_grad) kernels::matmul_nt_acc(dc, g.data(b.id), g.grad_buffer(a.id), n, m, k);
    if (g.nodes_[b.id].requires_grad) kernels::matmul_tn_acc(g.data(a.id), dc, g.grad_buffer(b.id), n, k, m);
  });
}

template <typename T>
Var Graph<T>::matmul_nt(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  const std::size_t n = av.rows(), k = av.cols(), m = bv.rows();
  require(bv.cols() == k, "matmul_nt: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()) + "^T");
  auto out = Tensor<T>::matrix(n, m);
  kernels::matmul_nt_acc(av.data(), bv.data(), out.data(), n, k, m);
  return push(std::move(out), any_requires({a, b}), [a, b, n, k, m](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    if (g.nodes_[a.id].requires_grad) kernels::matmul_acc(dc, g.data(b.id), g.grad_buffer(a.id), n, m, k);
    if (g.nodes_[b.id].requires_grad) kernels::matmul_tn_acc(dc, g.data(a.id), g.grad_buffer(b.id), n, m, k);
  });
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  require(av.shape() == bv.shape(), "add: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t size = out.size();
  return push(std::move(out), any_requires({a, b}), [a, b, size](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    for (Var in : {a, b}) {
      if (!g.nodes_[in.id].requires_grad) continue;
      T* d = g.grad_buffer(in.id);
      for (std::size_t i = 0; i < size; ++i) d[i] += dc[i];
    }
  });
}

template <typename T>
Var Graph<T>::add_row(Var a, Var bias) {
  const auto& av = value(a);
  const auto& bv = value(bias);
  const std::size_t n = av.rows(), m = av.cols();
  require(bv.size() == m, "add_row: bias size " + std::to_string(bv.size()) + " vs width " + std::to_string(m));
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = av[i * m + j] + bv[j];
  }
  return push(std::move(out), any_requires({a, bias}), [a, bias, n, m](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    if (g.nodes_[a.id].requires_grad) {
      T* d = g.grad_buffer(a.id);
      for (std::size_t i = 0; i < n * m; ++i) d[i] += dc[i];
    }
    if (g.nodes_[bias.id].requires_grad) {
      T* d = g.grad_buffer(bias.id);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) d[j] += dc[i * m + j];
      }
    }
  });
}

template <typename T>
Var Graph<T>::elementwise(Var a, const std::function<T(T)>& f, const std::function<T(T, T)>& df_from_output) {
  const auto& av = value(a);
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  const std::size_t size = out.size();
  return push(std::move(out), any_requires({a}), [a, size, df_from_output](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    const T* x = g.data(a.id);
    const T* y = g.data(self);
    T* d = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < size; ++i) d[i] += dc[i] * df_from_output(x[i], y[i]);
  });
}

template <typename T>
Var Graph<T>::scale(Var a, T factor) {
  return elementwise(a, [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Var Graph<T>::one_minus(Var a) {
  return elementwise(a, [](T x) { return T{1} - x; }, [](T, T) { return T{-1}; });
}

template <typename T>
Var Graph<T>::sigmoid(Var a) {
  return elementwise(a, [](T x) { return numerics::sigmoid(x); }, [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var Graph<T>::tanh(Var a) {
  return elementwise(a, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Var Graph<T>::scale_rows(Var gate, Var x) {
  const auto& gv = value(gate);
  const auto& xv = value(x);
  const std::size_t n = xv.rows(), m = xv.cols();
  require(gv.size() == n, "scale_rows: gate " + shape_string(gv.shape()) + " vs " + shape_string(xv.shape()));
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = gv[i] * xv[i * m + j];
  }
  return push(std::move(out), any_requires({gate, x}), [gate, x, n, m](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    const T* gd = g.data(gate.id);
    const T* xd = g.data(x.id);
    if (g.nodes_[gate.id].requires_grad) {
      T* d = g.grad_buffer(gate.id);
      for (std::size_t i = 0; i < n; ++i) {
        T acc{0};
        for (std::size_t j = 0; j < m; ++j) acc += dc[i * m + j] * xd[i * m + j];
        d[i] += acc;
      }
    }
    if (g.nodes_[x.id].requires_grad) {
      T* d = g.grad_buffer(x.id);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) d[i * m + j] += dc[i * m + j] * gd[i];
      }
    }
  });
}

template <typename T>
Var Graph<T>::glu(Var a) {
  const auto& av = value(a);
  auto out = numerics::glu(av);
  const std::size_t n = av.rows(), half = av.cols() / 2;
  return push(std::move(out), any_requires({a}), [a, n, half](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    const T* x = g.data(a.id);
    T* d = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < n; ++i) {
      const T* row = x + i * 2 * half;
      T* drow = d + i * 2 * half;
      for (std::size_t j = 0; j < half; ++j) {
        const T s = numerics::sigmoid(row[half + j]);
        const T up = dc[i * half + j];
        drow[j] += up * s;
        drow[half + j] += up * row[j] * s * (T{1} - s);
      }
    }
  });
}

template <typename T>
Var Graph<T>::softmax_rows(Var a) {
  const auto& av = value(a);
  auto out = numerics::softmax(av);
  const std::size_t n = av.rows(), m = av.cols();
  return push(std::move(out), any_requires({a}), [a, n, m](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    const T* y = g.data(self);
    T* d = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < n; ++i) {
      T dot{0};
      for (std::size_t j = 0; j < m; ++j) dot += dc[i * m + j] * y[i * m + j];
      for (std::size_t j = 0; j < m; ++j) d[i * m + j] += y[i * m + j] * (dc[i * m + j] - dot);
    }
  });
}

template <typename T>
Var Graph<T>::log_softmax_rows(Var a) {
  const auto& av = value(a);
  auto out = numerics::log_softmax(av);
  const std::size_t n = av.rows(), m = av.cols();
  return push(std::move(out), any_requires({a}), [a, n, m](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    const T* y = g.data(self);
    T* d = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < n; ++i) {
      T total{0};
      for (std::size_t j = 0; j < m; ++j) total += dc[i * m + j];
      for (std::size_t j = 0; j < m; ++j) d[i * m + j] += dc[i * m + j] - std::exp(y[i * m + j]) * total;
    }
  });
}

template <typename T>
Var Graph<T>::conv1d(Var seq, Var kernel, Var bias, Padding padding) {
  const auto& sv = value(seq);
  const auto& kv = value(kernel);
  auto out = conv1d_window(sv, kv, value(bias), padding);
  const std::size_t length = sv.rows(), d_in = sv.cols(), k = kv.rows() / d_in, d_out = kv.cols();
  return push(std::move(out), any_requires({seq, kernel, bias}),
              [seq, kernel, bias, padding, length, d_in, k, d_out](Graph& g, std::size_t self) {
                T* gs = g.nodes_[seq.id].requires_grad ? g.grad_buffer(seq.id) : nullptr;
                T* gk = g.nodes_[kernel.id].requires_grad ? g.grad_buffer(kernel.id) : nullptr;
                T* gb = g.nodes_[bias.id].requires_grad ? g.grad_buffer(bias.id) : nullptr;
                kernels::conv1d_backward(g.data(seq.id), length, d_in, g.data(kernel.id), k, d_out, padding,
                                         g.grad_of(self), gs, gk, gb);
              });
}

template <typename T>
Var Graph<T>::gather_rows(Var table, std::span<const std::size_t> ids) {
  const auto& tv = value(table);
  const std::size_t m = tv.cols();
  auto out = Tensor<T>::matrix(ids.size(), m);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] < tv.rows(), "gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                                    std::to_string(tv.rows()) + " rows");
    auto src = tv.row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<std::size_t> copy(ids.begin(), ids.end());
  return push(std::move(out), any_requires({table}), [table, m, copy = std::move(copy)](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    T* d = g.grad_buffer(table.id);
    for (std::size_t i = 0; i < copy.size(); ++i) {
      for (std::size_t j = 0; j < m; ++j) d[copy[i] * m + j] += dc[i * m + j];
    }
  });
}

template <typename T>
Var Graph<T>::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t n = value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  bool needs = false;
  for (auto p : parts) {
    require(value(p).rows() == n, "concat_cols: row count mismatch");
    widths.push_back(value(p).cols());
    total += widths.back();
    needs = needs || nodes_[p.id].requires_grad;
  }
  auto out = Tensor<T>::matrix(n, total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& pv = value(parts[p]);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < widths[p]; ++j) out[i * total + offset + j] = pv[i * widths[p] + j];
    }
    offset += widths[p];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), needs, [inputs, widths, n, total](Graph& g, std::size_t self) {
    const T* dc = g.grad_of(self);
    std::size_t off = 0;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
      if (g.nodes_[inputs[p].id].requires_grad) {
        T* d = g.grad_buffer(inputs[p].id);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < widths[p]; ++j) d[i * widths[p] + j] += dc[i * total + off + j];
        }
      }
      off += widths[p];
    }
  });
}

template <typename T>
Var Graph<T>::nll(Var log_probs, std::span<const std::size_t> targets) {
  const auto& lv = value(log_probs);
  const std::size_t n = lv.rows(), m = lv.cols();
  require(targets.size() == n, "nll: target count mismatch");
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    require(targets[i] < m, "nll: target id out of range");
    total -= lv[i * m + targets[i]];
  }
  std::vector<std::size_t> copy(targets.begin(), targets.end());
  return push(Tensor<T>({1, 1}, total), any_requires({log_probs}),
              [log_probs, m, copy = std::move(copy)](Graph& g, std::size_t self) {
                const T up = g.grad_of(self)[0];
                T* d = g.grad_buffer(log_probs.id);
                for (std::size_t i = 0; i < copy.size(); ++i) d[i * m + copy[i]] -= up;
              });
}

template <typename T>
Var Graph<T>::sum(Var a) {
  const auto& av = value(a);
  T total{0};
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i];
  const std::size_t size = av.size();
  return push(Tensor<T>({1, 1}, total), any_requires({a}), [a, size](Graph& g, std::size_t self) {
    const T up = g.grad_of(self)[0];
    T* d = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < size; ++i) d[i] += up;
  });
}

template class Graph<float>;
template class Graph<double>;

}  // namespace rage::numerics
