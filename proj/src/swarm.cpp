#include "vgai/swarm.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vgai/comm_graph.hpp"

namespace vgai {

double Rng::normal(double mean, double stddev) {
  // Box-Muller on our own uniforms; u1 is kept away from zero.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool SwarmState::finite() const {
  return positions.allFinite() && velocities.allFinite() && accelerations.allFinite();
}

void SimConfig::validate() const {
  if (n_agents < 2) throw std::invalid_argument("SimConfig: n_agents must be >= 2");
  if (!(comm_radius > 0.0)) throw std::invalid_argument("SimConfig: comm_radius must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
  if (!(v_init >= 0.0)) throw std::invalid_argument("SimConfig: v_init must be >= 0");
  if (!(accel_limit > 0.0)) throw std::invalid_argument("SimConfig: accel_limit must be > 0");
  if (!(min_init_spacing >= 0.0)) throw std::invalid_argument("SimConfig: min_init_spacing must be >= 0");
  if (max_init_attempts < 1) throw std::invalid_argument("SimConfig: max_init_attempts must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("not a boolean: " + v);
}

Vec2 sample_disc(double radius, Rng& rng) {
  const double rho = radius * std::sqrt(rng.uniform());
  const double angle = 2.0 * std::numbers::pi * rng.uniform();
  return {rho * std::cos(angle), rho * std::sin(angle)};
}

// Agents that currently break the spacing or neighbor-count rule.
std::vector<int> violating_agents(const Points& positions, const SimConfig& config) {
  const int n = static_cast<int>(positions.rows());
  const double r2 = config.comm_radius * config.comm_radius;
  const double s2 = config.min_init_spacing * config.min_init_spacing;
  std::vector<int> bad;
  for (int i = 0; i < n; ++i) {
    int neighbors = 0;
    bool crowded = false;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d2 = (positions.row(i) - positions.row(j)).squaredNorm();
      if (d2 <= r2) ++neighbors;
      if (d2 < s2) crowded = true;
    }
    if (neighbors < 2 || crowded) bad.push_back(i);
  }
  return bad;
}

// Agents outside the largest component (ties go to the lowest label).
std::vector<int> stranded_agents(const Points& positions, double radius) {
  const auto labels = build_graph(positions, radius).components();
  std::vector<int> count(labels.size(), 0);
  for (int l : labels) ++count[static_cast<std::size_t>(l)];
  int keep = 0;
  for (std::size_t l = 1; l < count.size(); ++l) {
    if (count[l] > count[static_cast<std::size_t>(keep)]) keep = static_cast<int>(l);
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != keep) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

bool set_sim_config_field(SimConfig& c, const std::string& key, const std::string& value) {
  if (key == "n_agents") c.n_agents = std::stoi(value);
  else if (key == "comm_radius") c.comm_radius = std::stod(value);
  else if (key == "dt") c.dt = std::stod(value);
  else if (key == "v_init") c.v_init = std::stod(value);
  else if (key == "accel_limit") c.accel_limit = std::stod(value);
  else if (key == "min_init_spacing") c.min_init_spacing = std::stod(value);
  else if (key == "rng_seed") c.rng_seed = std::stoull(value);
  else if (key == "max_init_attempts") c.max_init_attempts = std::stoi(value);
  else if (key == "require_connected") c.require_connected = parse_bool(value);
  else return false;
  return true;
}

SimConfig load_sim_config(std::istream& in, SimConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!set_sim_config_field(base, key, value)) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  base.validate();
  return base;
}

SimConfig load_sim_config_file(const std::string& path, SimConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return load_sim_config(in, base);
}

bool validate_initialization(const SwarmState& state, const SimConfig& config) {
  if (state.size() < 3) return false;  // two neighbors each needs three agents
  if (!violating_agents(state.positions, config).empty()) return false;
  return !config.require_connected || build_graph(state.positions, config.comm_radius).connected();
}

SwarmState init_swarm(const SimConfig& config, Rng& rng) {
  config.validate();
  const int n = config.n_agents;
  const double disc = std::sqrt(static_cast<double>(n));

  SwarmState state;
  state.positions.resize(n, 2);
  for (int i = 0; i < n; ++i) state.positions.row(i) = sample_disc(disc, rng).transpose();

  bool ok = false;
  for (int sweep = 0; sweep < config.max_init_attempts; ++sweep) {
    auto bad = violating_agents(state.positions, config);
    if (bad.empty() && config.require_connected) bad = stranded_agents(state.positions, config.comm_radius);
    if (bad.empty()) {
      ok = n >= 3;
      break;
    }
    for (int i : bad) state.positions.row(i) = sample_disc(disc, rng).transpose();
  }
  if (!ok) {
    throw std::runtime_error("init_swarm: no valid configuration after " + std::to_string(config.max_init_attempts) +
                             " resampling sweeps (N=" + std::to_string(n) +
                             ", R=" + std::to_string(config.comm_radius) + ")");
  }

  state.velocities.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) state.velocities(i, c) = rng.uniform(-config.v_init, config.v_init);
  }
  const double b = 0.3 * config.v_init;
  const Vec2 bias(rng.uniform(-b, b), rng.uniform(-b, b));
  state.velocities.rowwise() += bias.transpose();
  state.accelerations = Points::Zero(n, 2);
  state.t = 0;
  return state;
}

Points saturate(const Points& actions, double limit) {
  if (!(limit > 0.0)) throw std::invalid_argument("saturate: limit must be > 0");
  return actions.cwiseMax(-limit).cwiseMin(limit);
}

SwarmState step_dynamics(const SwarmState& state, const Points& actions, double dt) {
  if (actions.rows() != state.size()) throw std::invalid_argument("step_dynamics: action count != agent count");
  if (!state.finite() || !actions.allFinite()) throw std::invalid_argument("step_dynamics: non-finite input");
  SwarmState next;
  next.t = state.t + 1;
  next.positions = state.positions + state.velocities * dt + 0.5 * dt * dt * actions;
  next.velocities = state.velocities + actions * dt;
  next.accelerations = actions;
  return next;
}

}  // namespace vgai
