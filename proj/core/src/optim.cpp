#include "uavnet/optim.hpp"

#include <cmath>

namespace uavnet::ad {

AdamState AdamState::for_shape(const Tensor& like, double learning_rate,
                               double beta1, double beta2, double epsilon) {
  AdamState s;
  s.first_moment = Tensor::zeros_like(like);
  s.second_moment = Tensor::zeros_like(like);
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
  if (!param.same_shape(grad) || !param.same_shape(state.first_moment) ||
      !param.same_shape(state.second_moment)) {
    throw ShapeError("adam_step: shape mismatch between parameter " +
                     shape_string(param.shape()) + " and gradient " +
                     shape_string(grad.shape()));
  }
  if (!grad.all_finite()) throw NonFiniteError("adam_step: non-finite gradient");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  auto p = param.data();
  auto g = grad.data();
  auto m = state.first_moment.data();
  auto v = state.second_moment.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

Adam::Adam(std::vector<Parameter*> params, double learning_rate, double beta1,
           double beta2, double epsilon)
    : params_(std::move(params)) {
  states_.reserve(params_.size());
  for (Parameter* p : params_) {
    states_.push_back(AdamState::for_shape(p->value, learning_rate, beta1, beta2, epsilon));
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_step(params_[i]->value, params_[i]->grad, states_[i]);
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

}  // namespace uavnet::ad
