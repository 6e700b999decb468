#pragma once

#include <array>
#include <initializer_list>

#include "vgai/swarm.hpp"

// State from {rx, ry, vx, vy} rows.
inline vgai::SwarmState make_state(std::initializer_list<std::array<double, 4>> rows) {
  vgai::SwarmState s;
  const int n = static_cast<int>(rows.size());
  s.positions.resize(n, 2);
  s.velocities.resize(n, 2);
  s.accelerations = vgai::Points::Zero(n, 2);
  int i = 0;
  for (const auto& r : rows) {
    s.positions.row(i) << r[0], r[1];
    s.velocities.row(i) << r[2], r[3];
    ++i;
  }
  return s;
}

inline vgai::SwarmState random_state(int n, double spread, double speed, vgai::Rng& rng) {
  vgai::SwarmState s;
  s.positions.resize(n, 2);
  s.velocities.resize(n, 2);
  s.accelerations = vgai::Points::Zero(n, 2);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 2; ++k) {
      s.positions(i, k) = rng.uniform(-spread, spread);
      s.velocities(i, k) = rng.uniform(-speed, speed);
    }
  }
  return s;
}
