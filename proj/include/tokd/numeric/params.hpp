#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "tokd/numeric/autodiff.hpp"

namespace tokd {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  /// Normalization-layer parameter: exempt from weight decay.
  bool norm = false;
};

/// Named parameters in registration order. The order is part of the
/// checkpoint layout, so it must be deterministic for a given config.
template <typename T>
class ParamStore {
 public:
  Parameter<T>& add(std::string name, Tensor<T> value, bool norm = false);

  bool contains(const std::string& name) const { return index_.contains(name); }
  std::size_t index_of(const std::string& name) const;
  Parameter<T>& get(const std::string& name) { return entries_[index_of(name)]; }
  const Parameter<T>& get(const std::string& name) const { return entries_[index_of(name)]; }

  std::vector<Parameter<T>>& entries() { return entries_; }
  const std::vector<Parameter<T>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t element_count() const;

  /// Same names, shapes and tags with all values set to zero.
  ParamStore zeros_like() const;
  void set_zero();

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& p : entries_) out.add(p.name, p.value.template cast<U>(), p.norm);
    return out;
  }

 private:
  std::vector<Parameter<T>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Exposes store entries as leaves of one graph, created on first use.
template <typename T>
class ParamBinder {
 public:
  ParamBinder(Graph<T>& graph, const ParamStore<T>& store, bool requires_grad);

  Var<T> operator()(const std::string& name);
  bool has(const std::string& name) const { return store_.contains(name); }
  Graph<T>& graph() { return graph_; }

  /// Adds the gradient of every bound leaf into the matching entry of `grads`.
  void accumulate_grads(ParamStore<T>& grads) const;

 private:
  Graph<T>& graph_;
  const ParamStore<T>& store_;
  bool requires_grad_;
  std::vector<std::ptrdiff_t> leaf_ids_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template class ParamBinder<float>;
extern template class ParamBinder<double>;

}  // namespace tokd
