#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vgai/comm_graph.hpp"
#include "vgai/controllers.hpp"
#include "vgai/nn/layers.hpp"
#include "vgai/nn/optim.hpp"
#include "vgai/swarm.hpp"
#include "vgai/vision.hpp"

namespace vgai {

enum class PolicyMode { kHandcrafted, kVision };

PolicyMode parse_policy_mode(std::string_view tag);
std::string_view to_string(PolicyMode mode);

struct PolicyConfig {
  PolicyMode mode = PolicyMode::kHandcrafted;
  int depth = 4;     // K: exchanges + 1
  int features = 6;  // F; handcrafted mode requires 6
  std::vector<int> readout_hidden{64, 64};
  GsoNormalization gso = GsoNormalization::kDegree;
  CameraConfig camera;
  VisionConfig vision;  // vision.features is overridden by `features`

  int input_width() const { return depth * features; }
  void validate() const;

  bool operator==(const PolicyConfig&) const = default;
};

// Theta is the readout KF -> hidden... -> 2; psi is the visual estimator
// (empty in handcrafted mode).
struct PolicyParams {
  PolicyConfig config;
  nn::Sequential theta;
  nn::Sequential psi;

  std::vector<nn::Param*> params();
  std::size_t parameter_count() const;
  void zero_grad();
};

std::vector<nn::LayerSpec> readout_layer_specs(const PolicyConfig& config);
PolicyParams make_policy(const PolicyConfig& config, Rng& rng);

// "vgai-policy 1" header, the config as key = value lines, then theta and
// psi in the network format. Round-trips bit-exactly.
void save_policy(std::ostream& out, const PolicyParams& policy);
PolicyParams load_policy(std::istream& in);
void save_policy_file(const std::string& path, const PolicyParams& policy);
PolicyParams load_policy_file(const std::string& path);

// NN_Theta(z_i); no saturation.
Vec2 dagnn_policy_action(std::span<const double> z, const nn::Sequential& theta);

// 2x2 rotation taking camera-frame vectors to the world frame.
Eigen::Matrix2d heading_rotation(double heading);

// Per-agent local state X(t) for the policy's mode: handcrafted features or
// the CNN applied to each agent's rendered view. history.back() is now.
Matrix policy_local_state(const PolicyParams& policy, std::span<const SwarmState> history, const CommGraph& graph);

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  // Called once before the first step of an episode.
  virtual void reset(int /*n_agents*/) {}
  // Raw (unsaturated) world-frame actions for history.back().
  virtual Points act(std::span<const SwarmState> history, const CommGraph& graph) = 0;
};

class ExpertController : public Controller {
 public:
  explicit ExpertController(PotentialConfig pot = {}) : pot_(pot) {}
  std::string name() const override { return "centralized"; }
  Points act(std::span<const SwarmState> history, const CommGraph& graph) override;

 private:
  PotentialConfig pot_;
};

class LocalController : public Controller {
 public:
  explicit LocalController(PotentialConfig pot = {}) : pot_(pot) {}
  std::string name() const override { return "local"; }
  Points act(std::span<const SwarmState> history, const CommGraph& graph) override;

 private:
  PotentialConfig pot_;
};

// Decentralized learned policy: X(t) from the mode, Z(t) through an
// aggregation buffer, NN_Theta row by row. Vision outputs are camera-frame
// and rotated back to the world.
class PolicyController : public Controller {
 public:
  explicit PolicyController(const PolicyParams& policy);
  std::string name() const override;
  void reset(int n_agents) override;
  Points act(std::span<const SwarmState> history, const CommGraph& graph) override;

 private:
  const PolicyParams* policy_;
  std::unique_ptr<AggregationBuffer> buffer_;
};

struct RolloutOptions {
  int steps = 100;
  PotentialConfig potential;
};

// states has steps + 1 entries (fewer after divergence); applied and expert
// have one entry per executed step. expert holds saturated world-frame labels.
struct Episode {
  std::uint64_t seed = 0;
  bool learner_driven = false;
  bool diverged = false;
  std::string diagnostic;
  std::vector<SwarmState> states;
  std::vector<Points> applied;
  std::vector<Points> expert;

  int steps() const { return static_cast<int>(applied.size()); }
};

// Initializes from sim.rng_seed and runs `controller`, saturating actions.
// A non-finite action or state stops the episode with diverged = true.
Episode run_episode(const SimConfig& sim, Controller& controller, const RolloutOptions& options = {});

// DAGger rollout: follows `learner` when given and learner_driven, the
// expert otherwise; labels are always the expert's.
Episode collect_rollout(const SimConfig& sim, const PolicyParams* learner, bool learner_driven,
                        const RolloutOptions& options = {});

double episode_cost(const Episode& episode);

struct RolloutDataset {
  SimConfig sim;
  std::vector<Episode> episodes;
};

struct Window {
  int episode = 0;
  int end = 0;  // step index of the label; steps end-K+1..end feed the window
};

// Non-overlapping K-windows ending at steps K-1, 2K-1, ... of every episode.
std::vector<Window> make_windows(const RolloutDataset& data, int depth);

// Forward/backward of the mean per-agent L1 loss over `batch`; gradients
// accumulate into policy (scaled by 1/(|batch| N)). Returns the loss.
double window_loss_and_grad(PolicyParams& policy, const RolloutDataset& data, std::span<const Window> batch,
                            bool accumulate_grad = true);

// Zeroes gradients, accumulates over the batch, takes one Adam step.
double bptt_update(PolicyParams& policy, const RolloutDataset& data, std::span<const Window> batch,
                   nn::OptimizerState& optimizer);

struct TrainConfig {
  int rounds = 4;
  int episodes_per_round = 10;
  int epochs = 10;
  int steps = 100;
  double learner_probability = 0.33;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::uint64_t episode_seed = 1000;      // first training episode seed
  int validation_episodes = 5;
  std::uint64_t validation_seed = 900000;  // held-out seeds
  PotentialConfig potential;

  void validate() const;
};

struct TrainLogEntry {
  int round = 0;
  int epoch = 0;
  int windows = 0;
  double loss = 0.0;
  double validation = -1.0;  // mean relative cost; < 0 when not measured
};

struct TrainResult {
  PolicyParams best;
  PolicyParams last;
  std::vector<TrainLogEntry> log;
  double best_validation = 0.0;
  int best_round = -1;
};

// Mean relative cost of `policy` against the expert over `episodes` seeds
// starting at `first_seed`. Diverged episodes count as the success threshold
// times ten.
double validation_cost(const PolicyParams& policy, const SimConfig& sim, const TrainConfig& config);

// DAGger rounds (round 0 pure expert), epochs of shuffled mini-batches,
// validation after each round; keeps the best round by validation cost.
TrainResult train(const PolicyConfig& policy_config, const SimConfig& sim, const TrainConfig& config,
                  std::ostream* progress = nullptr);

// One JSON object per line.
void write_train_log(std::ostream& out, std::span<const TrainLogEntry> log);

}  // namespace vgai
