#pragma once

#include "tokd/numeric/params.hpp"

namespace tokd {

struct AdamWHyper {
  double lr_peak = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.05;
  std::size_t warmup_steps = 2500;
  std::size_t total_steps = 100000;
  double ema_decay = 0.99;

  void validate() const;
  friend bool operator==(const AdamWHyper&, const AdamWHyper&) = default;
};

/// Linear warmup 0 -> lr_peak over warmup_steps, then linear decay to 0 at
/// total_steps. Throws ArgumentError past total_steps.
double lr_at(std::size_t step, const AdamWHyper& hp);

template <typename T>
struct OptimState {
  ParamStore<T> m;
  ParamStore<T> v;
  std::uint64_t step = 0;
  AdamWHyper hp;

  static OptimState init(const ParamStore<T>& params, const AdamWHyper& hp);
};

/// One AdamW update with bias correction and decoupled weight decay
/// (skipped for norm-tagged parameters). Increments state.step.
/// Throws NumericError naming the first parameter with a non-finite gradient.
template <typename T>
void adamw_step(ParamStore<T>& params, const ParamStore<T>& grads, OptimState<T>& state, double lr);

/// shadow <- decay * shadow + (1 - decay) * params.
template <typename T>
void ema_update(ParamStore<T>& shadow, const ParamStore<T>& params, double decay);

/// Global L2 norm over every gradient array.
template <typename T>
double grad_norm(const ParamStore<T>& grads);

}  // namespace tokd
