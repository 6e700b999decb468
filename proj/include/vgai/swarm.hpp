#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "vgai/types.hpp"

namespace vgai {

// Positions (m), velocities (m/s) and last applied accelerations (m/s^2) of
// N agents flying in one height plane, at discrete step t.
struct SwarmState {
  long t = 0;
  Points positions;
  Points velocities;
  Points accelerations;

  int size() const { return static_cast<int>(positions.rows()); }
  bool finite() const;
};

struct SimConfig {
  int n_agents = 50;
  double comm_radius = 1.5;   // R [m]
  double dt = 0.01;           // T_s [s]
  double v_init = 3.0;        // [m/s]
  double accel_limit = 30.0;  // [m/s^2]
  double min_init_spacing = 0.2;
  std::uint64_t rng_seed = 42;
  int max_init_attempts = 100;
  // Also reject initial graphs that split into several components.
  bool require_connected = true;

  // Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

// Reads "key = value" lines ('#' starts a comment). Unknown keys throw.
SimConfig load_sim_config(std::istream& in, SimConfig base = {});
SimConfig load_sim_config_file(const std::string& path, SimConfig base = {});
// Applies a single key/value pair; returns false for an unknown key.
bool set_sim_config_field(SimConfig& config, const std::string& key, const std::string& value);

// Positions uniform on the disc of radius sqrt(N); per-component velocities
// uniform on [-v_init, v_init] plus a shared flock bias drawn from
// [-0.3 v_init, 0.3 v_init]. Agents violating validate_initialization are
// relocated until the configuration passes; throws std::runtime_error after
// config.max_init_attempts sweeps.
SwarmState init_swarm(const SimConfig& config, Rng& rng);

// Every agent has at least two neighbors within comm_radius and no pair is
// closer than min_init_spacing (plus connectivity when required).
bool validate_initialization(const SwarmState& state, const SimConfig& config);

// Per-component clamp to [-limit, limit].
Points saturate(const Points& actions, double limit);

// Constant acceleration over one step:
//   r <- r + v dt + u dt^2 / 2,  v <- v + u dt,  t <- t + 1.
SwarmState step_dynamics(const SwarmState& state, const Points& actions, double dt);

}  // namespace vgai
