#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tokd/numeric/autodiff.hpp"
#include "tokd/numeric/params.hpp"

namespace tokd {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;  // index into the parameter list
  std::size_t worst_index = 0;  // flat element index inside that parameter
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t evaluations = 0;
};

/// Builds a scalar objective on `graph` from the given parameter leaves.
using ScalarObjective = std::function<Var<double>(Graph<double>& graph, std::span<const Var<double>> params)>;

/// Compares reverse-mode gradients against central differences.
///
/// Per element the error is |analytic - central| / max(|analytic|, |central|, 1e-12);
/// the report carries the maximum over all elements of all parameters.
/// Throws NumericError when the objective is non-finite at any evaluation point.
GradCheckReport grad_check(const ScalarObjective& objective, const std::vector<Tensor<double>>& params, double step);

/// Scalar objective over named parameters, read through a binder.
using StoreObjective = std::function<Var<double>(ParamBinder<double>& params)>;

/// grad_check over every entry of a parameter store; worst_param indexes the store.
GradCheckReport grad_check(const StoreObjective& objective, const ParamStore<double>& params, double step);

}  // namespace tokd
