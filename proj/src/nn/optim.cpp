#include "vgai/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace vgai::nn {

LossResult l1_loss(const Tensor& pred, const Tensor& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("l1_loss: shape mismatch");
  LossResult r{0.0, Tensor::zeros_like(pred)};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - target[i];
    r.value += std::abs(diff);
    r.grad[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  }
  return r;
}

OptimizerState make_optimizer_state(std::span<Param* const> params, AdamConfig config) {
  OptimizerState s;
  s.config = config;
  for (const Param* p : params) {
    s.first_moment.push_back(Tensor::zeros_like(p->value));
    s.second_moment.push_back(Tensor::zeros_like(p->value));
  }
  return s;
}

void adam_step(std::span<Param* const> params, OptimizerState& state) {
  if (params.size() != state.first_moment.size()) throw std::invalid_argument("adam_step: parameter list changed");
  const auto& c = state.config;
  ++state.step;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (m.size() != p.value.size()) throw std::invalid_argument("adam_step: moment shape mismatch");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace vgai::nn
