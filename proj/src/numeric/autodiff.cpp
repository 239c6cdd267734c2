#include "tokd/numeric/autodiff.hpp"

#include <string>

#include "tokd/numeric/errors.hpp"

namespace tokd {

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return graph_->value(id_);
}

template <typename T>
const Tensor<T>& Var<T>::grad() const {
  return graph_->grad(id_);
}

template <typename T>
bool Var<T>::has_grad() const {
  return graph_->has_grad(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
  return graph_->requires_grad(id_);
}

template <typename T>
Var<T> Graph<T>::push(std::string_view op, Tensor<T> value, bool requires_grad, Backward backward,
                      std::uint64_t flops) {
  if (checked_ && !value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op) + " (shape " +
                       shape_string(value.shape()) + ")");
  }
  nodes_.push_back(Node{std::move(value), Tensor<T>{}, requires_grad, requires_grad ? std::move(backward) : Backward{}});
  flops_ += flops;
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  return push("constant", std::move(value), false, {}, 0);
}

template <typename T>
Var<T> Graph<T>::leaf(Tensor<T> value, bool requires_grad) {
  return push("leaf", std::move(value), requires_grad, {}, 0);
}

template <typename T>
Var<T> Graph<T>::record(std::string_view op, Tensor<T> value, std::initializer_list<Var<T>> inputs, Backward backward,
                        std::uint64_t flops) {
  bool needs = false;
  for (const auto& v : inputs) needs = needs || requires_grad(v.id());
  return push(op, std::move(value), needs, std::move(backward), flops);
}

template <typename T>
Var<T> Graph<T>::record(std::string_view op, Tensor<T> value, const std::vector<Var<T>>& inputs, Backward backward,
                        std::uint64_t flops) {
  bool needs = false;
  for (const auto& v : inputs) needs = needs || requires_grad(v.id());
  return push(op, std::move(value), needs, std::move(backward), flops);
}

template <typename T>
const Tensor<T>& Graph<T>::grad(std::size_t id) const {
  if (nodes_[id].grad.empty()) throw ArgumentError("node " + std::to_string(id) + " has no gradient");
  return nodes_[id].grad;
}

template <typename T>
Tensor<T>& Graph<T>::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor<T>(node.value.shape());
  return node.grad;
}

template <typename T>
void Graph<T>::backward(Var<T> output) {
  if (value(output.id()).numel() != 1) {
    throw DimensionError("backward() without a seed needs a single-element output, got " +
                         shape_string(value(output.id()).shape()));
  }
  backward(output, Tensor<T>(value(output.id()).shape(), T(1)));
}

template <typename T>
void Graph<T>::backward(Var<T> output, const Tensor<T>& seed) {
  if (seed.shape() != value(output.id()).shape()) {
    throw DimensionError("backward seed " + shape_string(seed.shape()) + " does not match output " +
                         shape_string(value(output.id()).shape()));
  }
  Tensor<T>& g = grad_buffer(output.id());
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] += seed[i];
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.empty()) continue;
    node.backward(*this, node.grad);
  }
}

template class Var<float>;
template class Var<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace tokd
