#pragma once

#include <cstdint>
#include <vector>

#include "uavnet/tensor.hpp"

namespace uavnet::ad {

struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_shape(const Tensor& like, double learning_rate,
                             double beta1 = 0.9, double beta2 = 0.999,
                             double epsilon = 1e-8);
};

// Bias-corrected Adam update in place. Throws NonFiniteError on a non-finite
// gradient and ShapeError when shapes disagree.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

// Adam over a fixed set of parameters sharing one learning rate.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);

  void step();
  void zero_grad();

  const std::vector<Parameter*>& parameters() const { return params_; }
  const std::vector<AdamState>& states() const { return states_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<AdamState> states_;
};

}  // namespace uavnet::ad
