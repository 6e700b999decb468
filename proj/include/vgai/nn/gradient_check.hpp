#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vgai/nn/tensor.hpp"

namespace vgai::nn {

struct GradientCheckOptions {
  double step = 1e-6;
  // Denominator floor for the relative error, so components whose true
  // gradient is ~0 are judged on absolute error instead.
  double floor = 1e-4;
};

// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

// Central differences of `f` at `point` against `analytic`; returns the max
// relative error over all coordinates.
double gradient_check(const std::function<double(std::span<const double>)>& f, std::span<const double> point,
                      std::span<const double> analytic, GradientCheckOptions options = {});

// Same, perturbing the parameters in place and comparing against their
// accumulated `grad`. `loss` must not touch the gradients it is checked against.
double gradient_check(const std::function<double()>& loss, std::span<Param* const> params,
                      GradientCheckOptions options = {});

}  // namespace vgai::nn
