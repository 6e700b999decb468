#pragma once

#include <span>
#include <vector>

#include "vgai/nn/tensor.hpp"

namespace vgai::nn {

struct LossResult {
  double value = 0.0;
  Tensor grad;  // dL/dpred
};

// sum |pred - target|, subgradient sign(pred - target) with 0 at ties.
LossResult l1_loss(const Tensor& pred, const Tensor& target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators mirroring the parameter list.
struct OptimizerState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  long step = 0;
};

OptimizerState make_optimizer_state(std::span<Param* const> params, AdamConfig config = {});

// One bias-corrected Adam update from the gradients stored in `params`.
void adam_step(std::span<Param* const> params, OptimizerState& state);

}  // namespace vgai::nn
