#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vgai/swarm.hpp"
#include "vgai/trainer.hpp"

namespace vgai {

enum class SweepAxis { kNone, kFeatures, kDepth, kInitialVelocity, kRadius, kTeamSize };
enum class ControllerKind { kCentralized, kLocal, kDagnnState, kVgaiVision };

SweepAxis parse_sweep_axis(std::string_view tag);
std::string_view to_string(SweepAxis axis);
ControllerKind parse_controller_kind(std::string_view tag);
std::string_view to_string(ControllerKind kind);

struct ExperimentSpec {
  SweepAxis axis = SweepAxis::kNone;
  std::vector<double> values{0.0};  // ignored for kNone beyond its single cell
  std::vector<ControllerKind> controllers{ControllerKind::kCentralized, ControllerKind::kLocal};
  int episodes = 10;
  std::uint64_t first_seed = 0;  // episode e of every cell uses first_seed + e
  int steps = 100;
  SimConfig sim;
  PotentialConfig potential;
  // Per learned controller: checkpoint path. "{value}" is replaced by the
  // cell's axis value, so F and K sweeps can point at one model per cell.
  std::map<ControllerKind, std::string> checkpoints;
  std::string output_dir;  // empty: no files written

  void validate() const;
};

struct CellResult {
  double axis_value = 0.0;
  ControllerKind controller = ControllerKind::kCentralized;
  double mean = 0.0;
  double stddev = 0.0;
  bool success = false;  // mean < kFlockingSuccessThreshold
  int episodes = 0;      // finished, non-divergent
  int diverged = 0;
  std::vector<double> relative_costs;
};

struct Report {
  SweepAxis axis = SweepAxis::kNone;
  std::vector<CellResult> cells;
  double runtime_seconds = 0.0;  // not part of the deterministic serialization

  const CellResult* find(double axis_value, ControllerKind controller) const;
};

// Expert-normalized relative cost per cell; every controller in a cell runs
// from the same initial states. Divergent episodes are counted and excluded.
// Throws std::runtime_error when a needed checkpoint is missing.
Report run_experiment(const ExperimentSpec& spec);

// Evaluates one trained policy at each team size without retraining, next to
// the centralized and local baselines on the same seeds.
Report transfer_eval(const PolicyParams& policy, const SimConfig& sim, const std::vector<int>& team_sizes,
                     int episodes, std::uint64_t first_seed, int steps, const PotentialConfig& potential = {});

// Fixed-width table, one row per cell.
void write_report_table(std::ostream& out, const Report& report);
// One JSON object per cell and line; runtime excluded.
void write_report_jsonl(std::ostream& out, const Report& report);

// Trajectory files: columns t, agent, rx, ry, vx, vy, ux, uy, ux_expert,
// uy_expert, one row per (step, agent) of every executed step. State and
// action columns refer to the state at step t and the action taken there.
enum class TrajectoryFormat { kCsv, kJsonl };

TrajectoryFormat parse_trajectory_format(std::string_view tag);
void export_trajectory(std::ostream& out, const Episode& episode, TrajectoryFormat format);
void export_trajectory_file(const std::string& path, const Episode& episode, TrajectoryFormat format);

// Rebuilds states[0..steps-1], applied and expert. The final post-step state
// is not stored in the file and is recomputed from the dynamics with `dt`.
Episode import_trajectory(std::istream& in, TrajectoryFormat format, double dt = 0.01);

}  // namespace vgai
