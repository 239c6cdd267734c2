#include "tokd/numeric/params.hpp"

#include "tokd/numeric/errors.hpp"

namespace tokd {

template <typename T>
Parameter<T>& ParamStore<T>::add(std::string name, Tensor<T> value, bool norm) {
  if (index_.contains(name)) throw ArgumentError("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Parameter<T>{std::move(name), std::move(value), norm});
  return entries_.back();
}

template <typename T>
std::size_t ParamStore<T>::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
std::size_t ParamStore<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.numel();
  return n;
}

template <typename T>
ParamStore<T> ParamStore<T>::zeros_like() const {
  ParamStore out;
  for (const auto& p : entries_) out.add(p.name, Tensor<T>(p.value.shape()), p.norm);
  return out;
}

template <typename T>
void ParamStore<T>::set_zero() {
  for (auto& p : entries_) p.value.fill(T(0));
}

template <typename T>
ParamBinder<T>::ParamBinder(Graph<T>& graph, const ParamStore<T>& store, bool requires_grad)
    : graph_(graph), store_(store), requires_grad_(requires_grad), leaf_ids_(store.size(), -1) {}

template <typename T>
Var<T> ParamBinder<T>::operator()(const std::string& name) {
  const std::size_t i = store_.index_of(name);
  if (leaf_ids_[i] < 0) {
    Var<T> v = graph_.leaf(store_.entries()[i].value, requires_grad_);
    leaf_ids_[i] = static_cast<std::ptrdiff_t>(v.id());
    return v;
  }
  return Var<T>(&graph_, static_cast<std::size_t>(leaf_ids_[i]));
}

template <typename T>
void ParamBinder<T>::accumulate_grads(ParamStore<T>& grads) const {
  if (grads.size() != store_.size()) throw DimensionError("gradient store does not match parameter store");
  for (std::size_t i = 0; i < leaf_ids_.size(); ++i) {
    if (leaf_ids_[i] < 0) continue;
    const auto id = static_cast<std::size_t>(leaf_ids_[i]);
    if (!graph_.has_grad(id)) continue;
    const Tensor<T>& g = graph_.grad(id);
    Tensor<T>& dst = grads.entries()[i].value;
    for (std::size_t k = 0; k < g.numel(); ++k) dst[k] += g[k];
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template class ParamBinder<float>;
template class ParamBinder<double>;

}  // namespace tokd
