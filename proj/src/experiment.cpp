#include "vgai/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vgai/nn/checkpoint.hpp"

namespace vgai {

SweepAxis parse_sweep_axis(std::string_view tag) {
  if (tag == "none") return SweepAxis::kNone;
  if (tag == "F") return SweepAxis::kFeatures;
  if (tag == "K") return SweepAxis::kDepth;
  if (tag == "v_init") return SweepAxis::kInitialVelocity;
  if (tag == "R") return SweepAxis::kRadius;
  if (tag == "N") return SweepAxis::kTeamSize;
  throw std::invalid_argument("unknown sweep axis: " + std::string(tag));
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNone: return "none";
    case SweepAxis::kFeatures: return "F";
    case SweepAxis::kDepth: return "K";
    case SweepAxis::kInitialVelocity: return "v_init";
    case SweepAxis::kRadius: return "R";
    case SweepAxis::kTeamSize: return "N";
  }
  return "?";
}

ControllerKind parse_controller_kind(std::string_view tag) {
  if (tag == "centralized") return ControllerKind::kCentralized;
  if (tag == "local") return ControllerKind::kLocal;
  if (tag == "dagnn-state") return ControllerKind::kDagnnState;
  if (tag == "vgai-vision") return ControllerKind::kVgaiVision;
  throw std::invalid_argument("unknown controller: " + std::string(tag));
}

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kCentralized: return "centralized";
    case ControllerKind::kLocal: return "local";
    case ControllerKind::kDagnnState: return "dagnn-state";
    case ControllerKind::kVgaiVision: return "vgai-vision";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  if (values.empty()) throw std::invalid_argument("ExperimentSpec: axis values must be nonempty");
  if (episodes < 1) throw std::invalid_argument("ExperimentSpec: episodes must be >= 1");
  if (controllers.empty()) throw std::invalid_argument("ExperimentSpec: no controllers");
  if (steps < 1) throw std::invalid_argument("ExperimentSpec: steps must be >= 1");
  sim.validate();
}

const CellResult* Report::find(double axis_value, ControllerKind controller) const {
  for (const auto& c : cells) {
    if (c.axis_value == axis_value && c.controller == controller) return &c;
  }
  return nullptr;
}

namespace {

std::string value_tag(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  return nn::format_double(v);
}

std::string expand(std::string path, double value) {
  const std::string key = "{value}";
  for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key)) path.replace(pos, key.size(), value_tag(value));
  return path;
}

void summarize(CellResult& cell) {
  const auto& r = cell.relative_costs;
  cell.episodes = static_cast<int>(r.size());
  if (r.empty()) {
    cell.mean = std::nan("");
    cell.stddev = std::nan("");
    cell.success = false;
    return;
  }
  double sum = 0.0;
  for (double x : r) sum += x;
  cell.mean = sum / static_cast<double>(r.size());
  double ss = 0.0;
  for (double x : r) ss += (x - cell.mean) * (x - cell.mean);
  cell.stddev = r.size() > 1 ? std::sqrt(ss / static_cast<double>(r.size() - 1)) : 0.0;
  cell.success = cell.mean < kFlockingSuccessThreshold;
}

// Runs every controller over the seeds of one cell.
void run_cell(const SimConfig& base, double axis_value, const std::vector<ControllerKind>& kinds,
              const std::map<ControllerKind, const PolicyParams*>& policies, int episodes, std::uint64_t first_seed,
              const RolloutOptions& opts, std::vector<CellResult>& out) {
  std::vector<CellResult> cells(kinds.size());
  for (std::size_t c = 0; c < kinds.size(); ++c) {
    cells[c].axis_value = axis_value;
    cells[c].controller = kinds[c];
  }
  for (int e = 0; e < episodes; ++e) {
    SimConfig sim = base;
    sim.rng_seed = first_seed + static_cast<std::uint64_t>(e);
    ExpertController expert(opts.potential);
    const Episode ref = run_episode(sim, expert, opts);
    const double ref_cost = ref.diverged ? 0.0 : episode_cost(ref);
    for (std::size_t c = 0; c < kinds.size(); ++c) {
      if (ref.diverged) {
        ++cells[c].diverged;
        continue;
      }
      if (kinds[c] == ControllerKind::kCentralized) {
        cells[c].relative_costs.push_back(relative_cost(ref_cost, ref_cost));
        continue;
      }
      std::unique_ptr<Controller> ctrl;
      if (kinds[c] == ControllerKind::kLocal) ctrl = std::make_unique<LocalController>(opts.potential);
      else ctrl = std::make_unique<PolicyController>(*policies.at(kinds[c]));
      const Episode ep = run_episode(sim, *ctrl, opts);
      if (ep.diverged) {
        ++cells[c].diverged;
        continue;
      }
      cells[c].relative_costs.push_back(relative_cost(episode_cost(ep), ref_cost));
    }
  }
  for (auto& cell : cells) {
    summarize(cell);
    out.push_back(std::move(cell));
  }
}

bool learned(ControllerKind k) { return k == ControllerKind::kDagnnState || k == ControllerKind::kVgaiVision; }

}  // namespace

Report run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();
  Report report;
  report.axis = spec.axis;
  const RolloutOptions opts{spec.steps, spec.potential};
  const std::vector<double> values = spec.axis == SweepAxis::kNone ? std::vector<double>{0.0} : spec.values;

  std::map<std::string, PolicyParams> loaded;
  for (double value : values) {
    SimConfig sim = spec.sim;
    switch (spec.axis) {
      case SweepAxis::kInitialVelocity: sim.v_init = value; break;
      case SweepAxis::kRadius: sim.comm_radius = value; break;
      case SweepAxis::kTeamSize: sim.n_agents = static_cast<int>(value); break;
      default: break;
    }
    std::map<ControllerKind, const PolicyParams*> policies;
    for (ControllerKind k : spec.controllers) {
      if (!learned(k)) continue;
      const auto it = spec.checkpoints.find(k);
      if (it == spec.checkpoints.end()) {
        throw std::runtime_error("run_experiment: no checkpoint given for " + std::string(to_string(k)));
      }
      const std::string path = expand(it->second, value);
      auto found = loaded.find(path);
      if (found == loaded.end()) found = loaded.emplace(path, load_policy_file(path)).first;
      const PolicyParams& p = found->second;
      const PolicyMode want = k == ControllerKind::kVgaiVision ? PolicyMode::kVision : PolicyMode::kHandcrafted;
      if (p.config.mode != want) throw std::runtime_error("run_experiment: checkpoint mode mismatch in " + path);
      if (spec.axis == SweepAxis::kFeatures && p.config.features != static_cast<int>(value)) {
        throw std::runtime_error("run_experiment: checkpoint " + path + " has a different F");
      }
      if (spec.axis == SweepAxis::kDepth && p.config.depth != static_cast<int>(value)) {
        throw std::runtime_error("run_experiment: checkpoint " + path + " has a different K");
      }
      policies[k] = &p;
    }
    run_cell(sim, value, spec.controllers, policies, spec.episodes, spec.first_seed, opts, report.cells);
  }

  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!spec.output_dir.empty()) {
    std::ofstream table(spec.output_dir + "/report.txt");
    std::ofstream jsonl(spec.output_dir + "/report.jsonl");
    if (!table || !jsonl) throw std::runtime_error("run_experiment: cannot write to " + spec.output_dir);
    write_report_table(table, report);
    write_report_jsonl(jsonl, report);
  }
  return report;
}

Report transfer_eval(const PolicyParams& policy, const SimConfig& sim, const std::vector<int>& team_sizes,
                     int episodes, std::uint64_t first_seed, int steps, const PotentialConfig& potential) {
  if (team_sizes.empty()) throw std::invalid_argument("transfer_eval: no team sizes");
  if (episodes < 1) throw std::invalid_argument("transfer_eval: episodes must be >= 1");
  const auto started = std::chrono::steady_clock::now();
  Report report;
  report.axis = SweepAxis::kTeamSize;
  const ControllerKind kind =
      policy.config.mode == PolicyMode::kVision ? ControllerKind::kVgaiVision : ControllerKind::kDagnnState;
  const RolloutOptions opts{steps, potential};
  for (int n : team_sizes) {
    SimConfig s = sim;
    s.n_agents = n;
    s.validate();
    run_cell(s, n, {ControllerKind::kCentralized, ControllerKind::kLocal, kind}, {{kind, &policy}}, episodes, first_seed,
             opts, report.cells);
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

void write_report_table(std::ostream& out, const Report& report) {
  out << std::left << std::setw(8) << to_string(report.axis) << std::setw(14) << "controller" << std::right
      << std::setw(10) << "mean" << std::setw(10) << "std" << std::setw(9) << "success" << std::setw(10) << "episodes"
      << std::setw(10) << "diverged" << "\n";
  const auto flags = out.flags();
  for (const auto& c : report.cells) {
    out << std::left << std::setw(8) << value_tag(c.axis_value) << std::setw(14) << to_string(c.controller)
        << std::right << std::fixed << std::setprecision(3) << std::setw(10) << c.mean << std::setw(10) << c.stddev
        << std::setw(9) << (c.success ? "yes" : "no") << std::setw(10) << c.episodes << std::setw(10) << c.diverged
        << "\n";
    out.flags(flags);
  }
}

void write_report_jsonl(std::ostream& out, const Report& report) {
  for (const auto& c : report.cells) {
    nlohmann::ordered_json j;
    j["axis"] = to_string(report.axis);
    j["value"] = c.axis_value;
    j["controller"] = to_string(c.controller);
    j["mean"] = c.mean;
    j["std"] = c.stddev;
    j["success"] = c.success;
    j["episodes"] = c.episodes;
    j["diverged"] = c.diverged;
    j["relative_costs"] = c.relative_costs;
    out << j.dump() << "\n";
  }
}

// ---- trajectories ----

TrajectoryFormat parse_trajectory_format(std::string_view tag) {
  if (tag == "csv") return TrajectoryFormat::kCsv;
  if (tag == "jsonl") return TrajectoryFormat::kJsonl;
  throw std::invalid_argument("unknown trajectory format: " + std::string(tag));
}

namespace {

constexpr const char* kColumns[] = {"t", "agent", "rx", "ry", "vx", "vy", "ux", "uy", "ux_expert", "uy_expert"};

}  // namespace

void export_trajectory(std::ostream& out, const Episode& episode, TrajectoryFormat format) {
  using nn::format_double;
  if (format == TrajectoryFormat::kCsv) {
    for (std::size_t c = 0; c < std::size(kColumns); ++c) out << (c ? "," : "") << kColumns[c];
    out << "\n";
  }
  for (int t = 0; t < episode.steps(); ++t) {
    const SwarmState& s = episode.states[static_cast<std::size_t>(t)];
    const Points& u = episode.applied[static_cast<std::size_t>(t)];
    const Points& ue = episode.expert[static_cast<std::size_t>(t)];
    for (int i = 0; i < s.size(); ++i) {
      const double v[] = {s.positions(i, 0), s.positions(i, 1), s.velocities(i, 0), s.velocities(i, 1),
                          u(i, 0),           u(i, 1),           ue(i, 0),          ue(i, 1)};
      if (format == TrajectoryFormat::kCsv) {
        out << t << ',' << i;
        for (double x : v) out << ',' << format_double(x);
      } else {
        out << "{\"t\":" << t << ",\"agent\":" << i;
        for (std::size_t c = 0; c < std::size(v); ++c) out << ",\"" << kColumns[c + 2] << "\":" << format_double(v[c]);
        out << '}';
      }
      out << "\n";
    }
  }
}

void export_trajectory_file(const std::string& path, const Episode& episode, TrajectoryFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory: " + path);
  export_trajectory(out, episode, format);
  if (!out) throw std::runtime_error("failed writing trajectory: " + path);
}

Episode import_trajectory(std::istream& in, TrajectoryFormat format, double dt) {
  struct Row {
    long t;
    int agent;
    double v[8];
  };
  std::vector<Row> rows;
  std::string line;
  if (format == TrajectoryFormat::kCsv) {
    if (!std::getline(in, line)) return {};
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string tok;
      Row r{};
      std::vector<std::string> toks;
      while (std::getline(ss, tok, ',')) toks.push_back(tok);
      if (toks.size() != std::size(kColumns)) throw std::runtime_error("trajectory: bad CSV row: " + line);
      r.t = std::stol(toks[0]);
      r.agent = std::stoi(toks[1]);
      for (int c = 0; c < 8; ++c) r.v[c] = nn::parse_double(toks[static_cast<std::size_t>(c + 2)]);
      rows.push_back(r);
    }
  } else {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      Row r{};
      r.t = j.at("t").get<long>();
      r.agent = j.at("agent").get<int>();
      for (int c = 0; c < 8; ++c) r.v[c] = j.at(kColumns[c + 2]).get<double>();
      rows.push_back(r);
    }
  }

  Episode ep;
  if (rows.empty()) return ep;
  int n = 0;
  long steps = 0;
  for (const Row& r : rows) {
    n = std::max(n, r.agent + 1);
    steps = std::max(steps, r.t + 1);
  }
  if (static_cast<long>(rows.size()) != steps * n) throw std::runtime_error("trajectory: rows do not form a full grid");
  for (long t = 0; t < steps; ++t) {
    SwarmState s;
    s.t = t;
    s.positions = Points::Zero(n, 2);
    s.velocities = Points::Zero(n, 2);
    s.accelerations = t == 0 ? Points(Points::Zero(n, 2)) : ep.applied.back();
    ep.states.push_back(std::move(s));
    ep.applied.push_back(Points::Zero(n, 2));
    ep.expert.push_back(Points::Zero(n, 2));
  }
  for (const Row& r : rows) {
    const auto t = static_cast<std::size_t>(r.t);
    auto& s = ep.states[t];
    s.positions.row(r.agent) << r.v[0], r.v[1];
    s.velocities.row(r.agent) << r.v[2], r.v[3];
    ep.applied[t].row(r.agent) << r.v[4], r.v[5];
    ep.expert[t].row(r.agent) << r.v[6], r.v[7];
  }
  for (std::size_t t = 1; t < ep.states.size(); ++t) ep.states[t].accelerations = ep.applied[t - 1];
  ep.states.push_back(step_dynamics(ep.states.back(), ep.applied.back(), dt));
  return ep;
}

}  // namespace vgai
