#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "tokd/numeric/tensor.hpp"

namespace tokd {

template <typename T>
class Graph;

/// Handle to a differentiable tensor recorded on a Graph.
///
/// A Var is cheap to copy; its value and gradient live in the owning graph and
/// stay valid for the graph's lifetime.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  const Tensor<T>& value() const;
  const Tensor<T>& grad() const;
  bool has_grad() const;
  bool requires_grad() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Graph<T>& graph() const { return *graph_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
/// sweep over node ids is a valid topological order for backpropagation.
template <typename T>
class Graph {
 public:
  /// Receives the gradient flowing into the node and accumulates into inputs.
  using Backward = std::function<void(Graph&, const Tensor<T>& out_grad)>;

  /// In checked mode every recorded value is scanned for NaN/Inf.
  explicit Graph(bool checked = false) : checked_(checked) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> leaf(Tensor<T> value, bool requires_grad = true);

  /// Appends an op result. `backward` is dropped when no input needs a gradient.
  Var<T> record(std::string_view op, Tensor<T> value, std::initializer_list<Var<T>> inputs, Backward backward,
                std::uint64_t flops);
  Var<T> record(std::string_view op, Tensor<T> value, const std::vector<Var<T>>& inputs, Backward backward,
                std::uint64_t flops);

  /// Backpropagates from a single-element output with seed 1.
  void backward(Var<T> output);
  /// Backpropagates an explicit output gradient (same shape as the output).
  void backward(Var<T> output, const Tensor<T>& seed);

  const Tensor<T>& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor<T>& grad(std::size_t id) const;
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, zero-initialized on first use.
  Tensor<T>& grad_buffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }
  std::uint64_t flops() const { return flops_; }
  bool checked() const { return checked_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var<T> push(std::string_view op, Tensor<T> value, bool requires_grad, Backward backward, std::uint64_t flops);

  std::vector<Node> nodes_;
  std::uint64_t flops_ = 0;
  bool checked_ = false;
};

extern template class Var<float>;
extern template class Var<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace tokd
