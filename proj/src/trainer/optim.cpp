#include "tokd/trainer/optim.hpp"

#include <cmath>

#include "tokd/numeric/errors.hpp"

namespace tokd {

void AdamWHyper::validate() const {
  if (!(lr_peak >= 0.0)) throw ConfigError("lr_peak must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (total_steps == 0 || warmup_steps > total_steps) throw ConfigError("need 0 <= warmup_steps <= total_steps, total > 0");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("ema_decay must be in [0, 1)");
}

double lr_at(std::size_t step, const AdamWHyper& hp) {
  if (step > hp.total_steps) {
    throw ArgumentError("lr_at: step " + std::to_string(step) + " beyond total_steps " + std::to_string(hp.total_steps));
  }
  if (step < hp.warmup_steps) return hp.lr_peak * static_cast<double>(step) / static_cast<double>(hp.warmup_steps);
  const std::size_t decay = hp.total_steps - hp.warmup_steps;
  if (decay == 0) return hp.lr_peak;
  return hp.lr_peak * static_cast<double>(hp.total_steps - step) / static_cast<double>(decay);
}

template <typename T>
OptimState<T> OptimState<T>::init(const ParamStore<T>& params, const AdamWHyper& hp) {
  hp.validate();
  return OptimState{params.zeros_like(), params.zeros_like(), 0, hp};
}

template <typename T>
void adamw_step(ParamStore<T>& params, const ParamStore<T>& grads, OptimState<T>& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adamw_step: parameter, gradient and moment stores differ in size");
  }
  for (const auto& g : grads.entries()) {
    if (!g.value.all_finite()) throw NumericError("adamw_step: non-finite gradient for '" + g.name + "'");
  }
  const AdamWHyper& hp = state.hp;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(hp.beta1, t), bc2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.entries()[i];
    const auto& g = grads.entries()[i].value;
    auto& m = state.m.entries()[i].value;
    auto& v = state.v.entries()[i].value;
    if (g.shape() != p.value.shape()) throw DimensionError("adamw_step: gradient shape mismatch for '" + p.name + "'");
    const double decay = p.norm ? 1.0 : 1.0 - lr * hp.weight_decay;
    for (std::size_t k = 0; k < g.numel(); ++k) {
      const double gk = g[k];
      const double mk = hp.beta1 * m[k] + (1.0 - hp.beta1) * gk;
      const double vk = hp.beta2 * v[k] + (1.0 - hp.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = (mk / bc1) / (std::sqrt(vk / bc2) + hp.eps);
      p.value[k] = static_cast<T>(p.value[k] * decay - lr * update);
    }
  }
}

template <typename T>
void ema_update(ParamStore<T>& shadow, const ParamStore<T>& params, double decay) {
  if (!(decay >= 0.0 && decay < 1.0)) throw ArgumentError("ema_update: decay must be in [0, 1)");
  if (shadow.size() != params.size()) throw DimensionError("ema_update: store size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& s = shadow.entries()[i].value;
    const auto& p = params.entries()[i].value;
    if (s.shape() != p.shape()) throw DimensionError("ema_update: shape mismatch for '" + params.entries()[i].name + "'");
    for (std::size_t k = 0; k < p.numel(); ++k) s[k] = static_cast<T>(decay * s[k] + (1.0 - decay) * p[k]);
  }
}

template <typename T>
double grad_norm(const ParamStore<T>& grads) {
  double ss = 0.0;
  for (const auto& g : grads.entries())
    for (T v : g.value.values()) ss += static_cast<double>(v) * v;
  return std::sqrt(ss);
}

template struct OptimState<float>;
template struct OptimState<double>;
template void adamw_step(ParamStore<float>&, const ParamStore<float>&, OptimState<float>&, double);
template void adamw_step(ParamStore<double>&, const ParamStore<double>&, OptimState<double>&, double);
template void ema_update(ParamStore<float>&, const ParamStore<float>&, double);
template void ema_update(ParamStore<double>&, const ParamStore<double>&, double);
template double grad_norm(const ParamStore<float>&);
template double grad_norm(const ParamStore<double>&);

}  // namespace tokd
