#include "vgai/controllers.hpp"

#include <cmath>
#include <stdexcept>

namespace vgai {

namespace {

double checked_squared_distance(const Vec2& ri, const Vec2& rj) {
  const double d2 = (ri - rj).squaredNorm();
  if (!(d2 > 0.0)) throw std::domain_error("collision potential is singular at coincident positions");
  return d2;
}

Vec2 row2(const Points& p, int i) { return p.row(i).transpose(); }

// Accumulates the control law for agent i over the given partner set.
template <typename Partners>
Vec2 flocking_action(const SwarmState& s, int i, const Partners& partners, double rho) {
  Vec2 u = Vec2::Zero();
  const Vec2 ri = row2(s.positions, i);
  const Vec2 vi = row2(s.velocities, i);
  for (int j : partners) {
    if (j == i) continue;
    u -= vi - row2(s.velocities, j);
    u -= potential_gradient(ri, row2(s.positions, j), rho);
  }
  return u;
}

}  // namespace

double potential_value(const Vec2& ri, const Vec2& rj, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("potential: rho must be > 0");
  const double d2 = checked_squared_distance(ri, rj);
  if (d2 <= rho * rho) return 1.0 / d2 - std::log(d2);
  const double rho2 = rho * rho;
  return 1.0 / rho2 - std::log(rho2);
}

Vec2 potential_gradient(const Vec2& ri, const Vec2& rj, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("potential: rho must be > 0");
  const double d2 = checked_squared_distance(ri, rj);
  if (d2 > rho * rho) return Vec2::Zero();
  return (-2.0 / (d2 * d2) - 2.0 / d2) * (ri - rj);
}

Points centralized_expert(const SwarmState& state, const PotentialConfig& pot) {
  const int n = state.size();
  Points u(n, 2);
  std::vector<int> everyone(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) everyone[static_cast<std::size_t>(j)] = j;
  for (int i = 0; i < n; ++i) u.row(i) = flocking_action(state, i, everyone, pot.rho).transpose();
  return u;
}

Points local_heuristic(const SwarmState& state, const CommGraph& graph, const PotentialConfig& pot) {
  const int n = state.size();
  if (graph.size() != n) throw std::invalid_argument("local_heuristic: graph size != agent count");
  Points u(n, 2);
  for (int i = 0; i < n; ++i) u.row(i) = flocking_action(state, i, graph.neighbors(i), pot.rho).transpose();
  return u;
}

double velocity_variance(const Points& velocities) {
  const auto n = velocities.rows();
  if (n == 0) return 0.0;
  const Eigen::RowVector2d mean = velocities.colwise().mean();
  return (velocities.rowwise() - mean).squaredNorm() / static_cast<double>(n);
}

double velocity_variance_cost(std::span<const SwarmState> trajectory) {
  if (trajectory.empty()) throw std::invalid_argument("velocity_variance_cost: empty trajectory");
  double cost = 0.0;
  for (const auto& s : trajectory) cost += velocity_variance(s.velocities);
  return cost;
}

double relative_cost(double controller_cost, double expert_cost) {
  if (!(expert_cost > 0.0)) throw std::domain_error("relative_cost: expert cost must be > 0 (degenerate episode)");
  return controller_cost / expert_cost;
}

Matrix handcrafted_state(const SwarmState& state, const CommGraph& graph) {
  const int n = state.size();
  if (graph.size() != n) throw std::invalid_argument("handcrafted_state: graph size != agent count");
  Matrix x = Matrix::Zero(n, kHandcraftedFeatures);
  for (int i = 0; i < n; ++i) {
    const Vec2 ri = row2(state.positions, i);
    const Vec2 vi = row2(state.velocities, i);
    for (int j : graph.neighbors(i)) {
      const Vec2 rij = ri - row2(state.positions, j);
      const double d2 = checked_squared_distance(ri, row2(state.positions, j));
      const Vec2 dv = vi - row2(state.velocities, j);
      x(i, 0) += dv.x();
      x(i, 1) += dv.y();
      x(i, 2) += rij.x() / (d2 * d2);
      x(i, 3) += rij.y() / (d2 * d2);
      x(i, 4) += rij.x() / d2;
      x(i, 5) += rij.y() / d2;
    }
  }
  return x;
}

}  // namespace vgai
