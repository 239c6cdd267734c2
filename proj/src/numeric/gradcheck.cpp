#include "tokd/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tokd/numeric/errors.hpp"

namespace tokd {
namespace {

double checked(double value) {
  if (!std::isfinite(value)) throw NumericError("grad_check: objective is not finite");
  return value;
}

/// Central differences over `values`, compared against `analytic` element by element.
template <typename Eval>
GradCheckReport compare(std::vector<Tensor<double>*> values, const std::vector<Tensor<double>>& analytic, double step,
                        Eval&& eval) {
  GradCheckReport report;
  report.evaluations = 1;
  bool first = true;
  for (std::size_t pi = 0; pi < values.size(); ++pi) {
    Tensor<double>& v = *values[pi];
    for (std::size_t k = 0; k < v.numel(); ++k) {
      const double a = analytic[pi].empty() ? 0.0 : analytic[pi][k];
      const double original = v[k];
      v[k] = original + step;
      const double plus = checked(eval());
      v[k] = original - step;
      const double minus = checked(eval());
      v[k] = original;
      report.evaluations += 2;
      const double numeric = (plus - minus) / (2.0 * step);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
      const double err = std::abs(a - numeric) / denom;
      if (first || err > report.max_rel_error) {
        first = false;
        report.max_rel_error = err;
        report.worst_param = pi;
        report.worst_index = k;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace

GradCheckReport grad_check(const ScalarObjective& objective, const std::vector<Tensor<double>>& params, double step) {
  if (!(step > 0.0)) throw ArgumentError("grad_check: step must be positive");

  Graph<double> graph;
  std::vector<Var<double>> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) leaves.push_back(graph.leaf(p, true));
  Var<double> out = objective(graph, leaves);
  checked(out.value().item());
  graph.backward(out);
  std::vector<Tensor<double>> analytic;
  for (const auto& l : leaves) analytic.push_back(l.has_grad() ? l.grad() : Tensor<double>());

  std::vector<Tensor<double>> probe = params;
  std::vector<Tensor<double>*> values;
  for (auto& p : probe) values.push_back(&p);
  return compare(values, analytic, step, [&] {
    Graph<double> g;
    std::vector<Var<double>> in;
    in.reserve(probe.size());
    for (const auto& p : probe) in.push_back(g.leaf(p, false));
    return objective(g, in).value().item();
  });
}

GradCheckReport grad_check(const StoreObjective& objective, const ParamStore<double>& params, double step) {
  if (!(step > 0.0)) throw ArgumentError("grad_check: step must be positive");

  ParamStore<double> grads = params.zeros_like();
  {
    Graph<double> graph;
    ParamBinder<double> binder(graph, params, true);
    Var<double> out = objective(binder);
    checked(out.value().item());
    graph.backward(out);
    binder.accumulate_grads(grads);
  }
  std::vector<Tensor<double>> analytic;
  for (const auto& g : grads.entries()) analytic.push_back(g.value);

  ParamStore<double> probe = params;
  std::vector<Tensor<double>*> values;
  for (auto& p : probe.entries()) values.push_back(&p.value);
  return compare(values, analytic, step, [&] {
    Graph<double> g;
    ParamBinder<double> binder(g, probe, false);
    return objective(binder).value().item();
  });
}

}  // namespace tokd
