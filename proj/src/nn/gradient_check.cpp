#include "vgai/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vgai::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

double gradient_check(const std::function<double(std::span<const double>)>& f, std::span<const double> point,
                      std::span<const double> analytic, GradientCheckOptions options) {
  if (point.size() != analytic.size()) throw std::invalid_argument("gradient_check: size mismatch");
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + options.step;
    const double plus = f(x);
    x[i] = saved - options.step;
    const double minus = f(x);
    x[i] = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    worst = std::max(worst, relative_error(analytic[i], numeric, options.floor));
  }
  return worst;
}

double gradient_check(const std::function<double()>& loss, std::span<Param* const> params,
                      GradientCheckOptions options) {
  double worst = 0.0;
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + options.step;
      const double plus = loss();
      p->value[i] = saved - options.step;
      const double minus = loss();
      p->value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      worst = std::max(worst, relative_error(p->grad[i], numeric, options.floor));
    }
  }
  return worst;
}

}  // namespace vgai::nn
