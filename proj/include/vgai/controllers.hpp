#pragma once

#include <span>

#include "vgai/comm_graph.hpp"
#include "vgai/swarm.hpp"

namespace vgai {

struct PotentialConfig {
  double rho = 1.0;  // minimum allowed inter-agent distance [m]
};

// U(r_i, r_j) = 1/d^2 - log(d^2) for d <= rho, else the constant 1/rho^2 - log(rho^2).
// Throws std::domain_error for coincident positions.
double potential_value(const Vec2& ri, const Vec2& rj, double rho);

// Gradient of U with respect to r_i; zero on the constant branch.
Vec2 potential_gradient(const Vec2& ri, const Vec2& rj, double rho);

// u*_i = -sum_j (v_i - v_j) - sum_j grad_{r_i} U(r_i, r_j) over every other agent.
Points centralized_expert(const SwarmState& state, const PotentialConfig& pot);

// Same law restricted to the one-hop neighbors in `graph`.
Points local_heuristic(const SwarmState& state, const CommGraph& graph, const PotentialConfig& pot);

// (1/N) sum_i ||v_i - mean_j v_j||^2 for one time step.
double velocity_variance(const Points& velocities);

// Sum of velocity_variance over the trajectory. Throws on an empty trajectory.
double velocity_variance_cost(std::span<const SwarmState> trajectory);

// controller_cost / expert_cost; throws std::domain_error unless expert_cost > 0.
double relative_cost(double controller_cost, double expert_cost);

// Relative cost below this counts as successful flocking.
inline constexpr double kFlockingSuccessThreshold = 3.0;

// Per agent [sum (v_i - v_j), sum r_ij / |r_ij|^4, sum r_ij / |r_ij|^2] over
// neighbors j, with r_ij = r_i - r_j. N x 6.
Matrix handcrafted_state(const SwarmState& state, const CommGraph& graph);

inline constexpr int kHandcraftedFeatures = 6;

}  // namespace vgai
