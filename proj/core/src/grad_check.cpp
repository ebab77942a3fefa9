#include "uavnet/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace uavnet::ad {

namespace {

double evaluate(const ScalarFunction& fn, const std::vector<Tensor>& point) {
  Tape tape;
  std::vector<Var> inputs;
  inputs.reserve(point.size());
  for (const Tensor& t : point) inputs.push_back(tape.constant(t));
  const double v = fn(tape, inputs).item();
  if (!std::isfinite(v)) throw NonFiniteError("grad_check: non-finite function value");
  return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarFunction& fn, std::vector<Tensor> point,
                           double epsilon) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> inputs;
    inputs.reserve(point.size());
    for (const Tensor& t : point) inputs.push_back(tape.leaf(t));
    const Var out = fn(tape, inputs);
    tape.backward(out);
    for (const Var& in : inputs) analytic.push_back(tape.grad(in));
  }

  GradCheckResult result;
  for (std::size_t k = 0; k < point.size(); ++k) {
    for (std::size_t i = 0; i < point[k].size(); ++i) {
      const double original = point[k][i];
      point[k][i] = original + epsilon;
      const double plus = evaluate(fn, point);
      point[k][i] = original - epsilon;
      const double minus = evaluate(fn, point);
      point[k][i] = original;

      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double exact = analytic[k][i];
      const double err = std::abs(exact - numeric) / std::max(1e-8, std::abs(numeric));
      if (err > result.max_relative_error || (k == 0 && i == 0)) {
        result.max_relative_error = std::max(result.max_relative_error, err);
        result.worst_input = k;
        result.worst_index = i;
        result.worst_analytic = exact;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace uavnet::ad
