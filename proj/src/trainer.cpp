#include "vgai/trainer.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "vgai/nn/checkpoint.hpp"

namespace vgai {

PolicyMode parse_policy_mode(std::string_view tag) {
  if (tag == "handcrafted" || tag == "dagnn-state") return PolicyMode::kHandcrafted;
  if (tag == "vision" || tag == "vgai-vision") return PolicyMode::kVision;
  throw std::invalid_argument("unknown policy mode: " + std::string(tag));
}

std::string_view to_string(PolicyMode mode) { return mode == PolicyMode::kVision ? "vision" : "handcrafted"; }

void PolicyConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("PolicyConfig: depth K must be >= 1");
  if (features < 1) throw std::invalid_argument("PolicyConfig: features must be >= 1");
  if (mode == PolicyMode::kHandcrafted && features != kHandcraftedFeatures) {
    throw std::invalid_argument("PolicyConfig: handcrafted mode has exactly 6 features");
  }
  for (int h : readout_hidden) {
    if (h < 1) throw std::invalid_argument("PolicyConfig: readout widths must be >= 1");
  }
  if (mode == PolicyMode::kVision) camera.validate();
}

std::vector<nn::Param*> PolicyParams::params() {
  auto p = theta.params();
  for (nn::Param* q : psi.params()) p.push_back(q);
  return p;
}

std::size_t PolicyParams::parameter_count() const { return theta.parameter_count() + psi.parameter_count(); }

void PolicyParams::zero_grad() {
  theta.zero_grad();
  psi.zero_grad();
}

std::vector<nn::LayerSpec> readout_layer_specs(const PolicyConfig& config) {
  std::vector<nn::LayerSpec> specs;
  int width = config.input_width();
  for (int h : config.readout_hidden) {
    specs.push_back({nn::LayerKind::kDense, width, h, 0, 1, 1, 0});
    specs.push_back({nn::LayerKind::kRelu, 0, 0, 0, 1, 1, 0});
    width = h;
  }
  specs.push_back({nn::LayerKind::kDense, width, 2, 0, 1, 1, 0});
  return specs;
}

PolicyParams make_policy(const PolicyConfig& config, Rng& rng) {
  config.validate();
  PolicyParams p;
  p.config = config;
  p.config.vision.features = config.features;
  if (config.mode == PolicyMode::kVision) {
    p.psi = nn::Sequential(vision_layer_specs(config.camera, p.config.vision));
    p.psi.initialize(rng);
  }
  p.theta = nn::Sequential(readout_layer_specs(config));
  p.theta.initialize(rng);
  return p;
}

// ---- checkpoints ----

namespace {

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s.empty() ? "-" : s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  if (s == "-") return out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

}  // namespace

void save_policy(std::ostream& out, const PolicyParams& policy) {
  const auto& c = policy.config;
  out << "vgai-policy 1\n";
  out << "mode " << to_string(c.mode) << "\n";
  out << "depth " << c.depth << "\n";
  out << "features " << c.features << "\n";
  out << "readout_hidden " << join(c.readout_hidden) << "\n";
  out << "gso " << to_string(c.gso) << "\n";
  out << "camera.width " << c.camera.width << "\n";
  out << "camera.height " << c.camera.height << "\n";
  out << "camera.max_distance " << nn::format_double(c.camera.max_distance) << "\n";
  out << "camera.half_width " << nn::format_double(c.camera.half_width) << "\n";
  out << "camera.frame " << to_string(c.camera.frame) << "\n";
  out << "camera.motion_lag " << c.camera.motion_lag << "\n";
  out << "vision.block_channels " << join(c.vision.block_channels) << "\n";
  out << "vision.block_strides " << join(c.vision.block_strides) << "\n";
  out << "vision.hidden " << c.vision.hidden << "\n";
  out << "config-end\n";
  nn::write_network(out, "theta", policy.theta);
  nn::write_network(out, "psi", policy.psi);
}

PolicyParams load_policy(std::istream& in) {
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "vgai-policy" || version != 1) {
    throw std::runtime_error("policy checkpoint: bad header");
  }
  PolicyParams p;
  auto& c = p.config;
  while (in >> word && word != "config-end") {
    std::string v;
    if (!(in >> v)) throw std::runtime_error("policy checkpoint: missing value for " + word);
    if (word == "mode") c.mode = parse_policy_mode(v);
    else if (word == "depth") c.depth = std::stoi(v);
    else if (word == "features") c.features = std::stoi(v);
    else if (word == "readout_hidden") c.readout_hidden = split_ints(v);
    else if (word == "gso") c.gso = parse_gso_normalization(v);
    else if (word == "camera.width") c.camera.width = std::stoi(v);
    else if (word == "camera.height") c.camera.height = std::stoi(v);
    else if (word == "camera.max_distance") c.camera.max_distance = nn::parse_double(v);
    else if (word == "camera.half_width") c.camera.half_width = nn::parse_double(v);
    else if (word == "camera.frame") c.camera.frame = parse_camera_frame(v);
    else if (word == "camera.motion_lag") c.camera.motion_lag = std::stoi(v);
    else if (word == "vision.block_channels") c.vision.block_channels = split_ints(v);
    else if (word == "vision.block_strides") c.vision.block_strides = split_ints(v);
    else if (word == "vision.hidden") c.vision.hidden = std::stoi(v);
    else throw std::runtime_error("policy checkpoint: unknown key " + word);
  }
  if (word != "config-end") throw std::runtime_error("policy checkpoint: truncated config");
  c.validate();
  c.vision.features = c.features;
  p.theta = nn::read_network(in);
  p.psi = nn::read_network(in);
  if (p.theta.specs() != readout_layer_specs(c)) throw std::runtime_error("policy checkpoint: readout shape mismatch");
  if (c.mode == PolicyMode::kVision && p.psi.specs() != vision_layer_specs(c.camera, c.vision)) {
    throw std::runtime_error("policy checkpoint: vision shape mismatch");
  }
  return p;
}

void save_policy_file(const std::string& path, const PolicyParams& policy) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  save_policy(out, policy);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

PolicyParams load_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint not found: " + path);
  return load_policy(in);
}

// ---- policy evaluation ----

Vec2 dagnn_policy_action(std::span<const double> z, const nn::Sequential& theta) {
  const auto specs = theta.specs();
  if (specs.empty() || specs.front().in != static_cast<int>(z.size())) {
    throw std::invalid_argument("dagnn_policy_action: input width does not match the readout");
  }
  const nn::Tensor y = theta.forward(nn::Tensor({static_cast<int>(z.size())}, std::vector<double>(z.begin(), z.end())));
  return {y[0], y[1]};
}

Eigen::Matrix2d heading_rotation(double heading) {
  const double c = std::cos(heading), s = std::sin(heading);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Matrix policy_local_state(const PolicyParams& policy, std::span<const SwarmState> history, const CommGraph& graph) {
  const SwarmState& now = history.back();
  if (policy.config.mode == PolicyMode::kHandcrafted) return handcrafted_state(now, graph);
  const int n = now.size();
  const int f = policy.config.features;
  Matrix x(n, f);
  for (int i = 0; i < n; ++i) {
    const nn::Tensor y = visual_state_estimate(render_from_history(history, i, policy.config.camera), policy.psi);
    for (int c = 0; c < f; ++c) x(i, c) = y[static_cast<std::size_t>(c)];
  }
  return x;
}

Points ExpertController::act(std::span<const SwarmState> history, const CommGraph&) {
  return centralized_expert(history.back(), pot_);
}

Points LocalController::act(std::span<const SwarmState> history, const CommGraph& graph) {
  return local_heuristic(history.back(), graph, pot_);
}

PolicyController::PolicyController(const PolicyParams& policy) : policy_(&policy) { policy.config.validate(); }

std::string PolicyController::name() const {
  return policy_->config.mode == PolicyMode::kVision ? "vgai-vision" : "dagnn-state";
}

void PolicyController::reset(int n_agents) {
  buffer_ = std::make_unique<AggregationBuffer>(policy_->config.depth, n_agents, policy_->config.features);
}

Points PolicyController::act(std::span<const SwarmState> history, const CommGraph& graph) {
  const SwarmState& now = history.back();
  if (!buffer_ || buffer_->agents() != now.size()) reset(now.size());
  buffer_->update(gso(graph, policy_->config.gso), policy_local_state(*policy_, history, graph));
  const Matrix z = buffer_->sequence();
  Points u(now.size(), 2);
  for (int i = 0; i < now.size(); ++i) {
    const Vector zi = z.row(i).transpose();
    Vec2 a = dagnn_policy_action(std::span<const double>(zi.data(), static_cast<std::size_t>(zi.size())), policy_->theta);
    if (policy_->config.mode == PolicyMode::kVision) a = heading_rotation(camera_heading(now, i, policy_->config.camera)) * a;
    u.row(i) = a.transpose();
  }
  return u;
}

// ---- rollouts ----

namespace {

Episode rollout(const SimConfig& sim, Controller& applied_by, const RolloutOptions& options) {
  if (options.steps < 0) throw std::invalid_argument("rollout: steps must be >= 0");
  Rng rng(sim.rng_seed);
  Episode ep;
  ep.seed = sim.rng_seed;
  ep.states.reserve(static_cast<std::size_t>(options.steps) + 1);
  ep.states.push_back(init_swarm(sim, rng));
  applied_by.reset(sim.n_agents);
  for (int t = 0; t < options.steps; ++t) {
    const SwarmState& now = ep.states.back();
    const CommGraph graph = build_graph(now.positions, sim.comm_radius);
    const Points expert = saturate(centralized_expert(now, options.potential), sim.accel_limit);
    const Points raw = applied_by.act(ep.states, graph);
    if (!raw.allFinite()) {
      ep.diverged = true;
      ep.diagnostic = applied_by.name() + ": non-finite action at step " + std::to_string(t);
      break;
    }
    const Points u = saturate(raw, sim.accel_limit);
    SwarmState next = step_dynamics(now, u, sim.dt);
    ep.applied.push_back(u);
    ep.expert.push_back(expert);
    if (!next.finite()) {
      ep.diverged = true;
      ep.diagnostic = applied_by.name() + ": non-finite state at step " + std::to_string(t + 1);
      break;
    }
    ep.states.push_back(std::move(next));
  }
  return ep;
}

}  // namespace

Episode run_episode(const SimConfig& sim, Controller& controller, const RolloutOptions& options) {
  try {
    return rollout(sim, controller, options);
  } catch (const std::domain_error& e) {
    // Coincident agents make the collision potential singular.
    Episode ep;
    ep.seed = sim.rng_seed;
    ep.diverged = true;
    ep.diagnostic = controller.name() + ": " + e.what();
    return ep;
  }
}

Episode collect_rollout(const SimConfig& sim, const PolicyParams* learner, bool learner_driven,
                        const RolloutOptions& options) {
  Episode ep;
  if (learner && learner_driven) {
    PolicyController c(*learner);
    ep = run_episode(sim, c, options);
    ep.learner_driven = true;
  } else {
    ExpertController c(options.potential);
    ep = run_episode(sim, c, options);
  }
  return ep;
}

double episode_cost(const Episode& episode) {
  return velocity_variance_cost(episode.states);
}

// ---- BPTT ----

std::vector<Window> make_windows(const RolloutDataset& data, int depth) {
  if (depth < 1) throw std::invalid_argument("make_windows: depth must be >= 1");
  std::vector<Window> out;
  for (std::size_t e = 0; e < data.episodes.size(); ++e) {
    const int steps = data.episodes[e].steps();
    for (int end = depth - 1; end < steps; end += depth) out.push_back({static_cast<int>(e), end});
  }
  return out;
}

double window_loss_and_grad(PolicyParams& policy, const RolloutDataset& data, std::span<const Window> batch,
                            bool accumulate_grad) {
  if (batch.empty()) throw std::invalid_argument("window_loss_and_grad: empty batch");
  const auto& cfg = policy.config;
  const int k_depth = cfg.depth;
  const int f = cfg.features;
  const bool vision = cfg.mode == PolicyMode::kVision;
  double total = 0.0;
  long count = 0;
  for (const Window& w : batch) count += data.episodes.at(static_cast<std::size_t>(w.episode)).states.front().size();
  const double scale = 1.0 / static_cast<double>(count);

  for (const Window& w : batch) {
    const Episode& ep = data.episodes.at(static_cast<std::size_t>(w.episode));
    const int start = w.end - k_depth + 1;
    if (start < 0 || w.end >= ep.steps()) throw std::invalid_argument("window_loss_and_grad: window shorter than K");
    const int n = ep.states.front().size();

    std::vector<Matrix> blocks(static_cast<std::size_t>(k_depth), Matrix::Zero(n, f));
    std::vector<GsoMatrix> shifts;
    std::vector<std::vector<nn::Tape>> tapes(static_cast<std::size_t>(k_depth));
    for (int tau = 0; tau < k_depth; ++tau) {
      const int t = start + tau;
      const std::span<const SwarmState> history(ep.states.data(), static_cast<std::size_t>(t) + 1);
      const CommGraph graph = build_graph(ep.states[static_cast<std::size_t>(t)].positions, data.sim.comm_radius);
      shifts.push_back(gso(graph, cfg.gso));
      Matrix x(n, f);
      if (vision) {
        auto& step_tapes = tapes[static_cast<std::size_t>(tau)];
        step_tapes.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
          const nn::Tensor y =
              visual_state_estimate(render_from_history(history, i, cfg.camera), policy.psi, step_tapes[static_cast<std::size_t>(i)]);
          for (int c = 0; c < f; ++c) x(i, c) = y[static_cast<std::size_t>(c)];
        }
      } else {
        x = handcrafted_state(history.back(), graph);
      }
      for (int k = k_depth - 1; k >= 1; --k) blocks[static_cast<std::size_t>(k)] = shift(shifts.back(), blocks[static_cast<std::size_t>(k - 1)]);
      blocks[0] = std::move(x);
    }

    const SwarmState& last = ep.states[static_cast<std::size_t>(w.end)];
    const Points& label = ep.expert[static_cast<std::size_t>(w.end)];
    std::vector<Matrix> grads(static_cast<std::size_t>(k_depth), Matrix::Zero(n, f));
    for (int i = 0; i < n; ++i) {
      std::vector<double> z(static_cast<std::size_t>(k_depth * f));
      for (int k = 0; k < k_depth; ++k) {
        for (int c = 0; c < f; ++c) z[static_cast<std::size_t>(k * f + c)] = blocks[static_cast<std::size_t>(k)](i, c);
      }
      Vec2 target = label.row(i).transpose();
      if (vision) target = heading_rotation(camera_heading(last, i, cfg.camera)).transpose() * target;
      nn::Tape tape;
      const nn::Tensor pred = policy.theta.forward(nn::Tensor({k_depth * f}, std::move(z)), tape);
      auto loss = nn::l1_loss(pred, nn::Tensor({2}, {target.x(), target.y()}));
      total += loss.value;
      if (!accumulate_grad) continue;
      loss.grad *= scale;
      const nn::Tensor gz = policy.theta.backward(loss.grad, tape);
      for (int k = 0; k < k_depth; ++k) {
        for (int c = 0; c < f; ++c) grads[static_cast<std::size_t>(k)](i, c) = gz[static_cast<std::size_t>(k * f + c)];
      }
    }
    if (!accumulate_grad || !vision) continue;

    // Reverse the aggregation recursion: grad X_tau = G_0, then G_{k-1} <- S_tau^T G_k.
    for (int tau = k_depth - 1; tau >= 0; --tau) {
      const Matrix gx = grads[0];
      const Matrix st = shifts[static_cast<std::size_t>(tau)].weights.transpose();
      for (int k = 0; k + 1 < k_depth; ++k) grads[static_cast<std::size_t>(k)] = st * grads[static_cast<std::size_t>(k + 1)];
      grads[static_cast<std::size_t>(k_depth - 1)].setZero();
      for (int i = 0; i < n; ++i) {
        nn::Tensor g({f});
        for (int c = 0; c < f; ++c) g[static_cast<std::size_t>(c)] = gx(i, c);
        policy.psi.backward(g, tapes[static_cast<std::size_t>(tau)][static_cast<std::size_t>(i)]);
      }
    }
  }
  return total * scale;
}

double bptt_update(PolicyParams& policy, const RolloutDataset& data, std::span<const Window> batch,
                   nn::OptimizerState& optimizer) {
  policy.zero_grad();
  const double loss = window_loss_and_grad(policy, data, batch, true);
  if (!std::isfinite(loss)) throw std::runtime_error("bptt_update: non-finite loss");
  const auto params = policy.params();
  nn::adam_step(params, optimizer);
  return loss;
}

// ---- training ----

void TrainConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("TrainConfig: rounds must be >= 1");
  if (episodes_per_round < 1) throw std::invalid_argument("TrainConfig: episodes_per_round must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
  if (!(learner_probability >= 0.0 && learner_probability <= 1.0)) {
    throw std::invalid_argument("TrainConfig: learner_probability must lie in [0, 1]");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (validation_episodes < 1) throw std::invalid_argument("TrainConfig: validation_episodes must be >= 1");
}

double validation_cost(const PolicyParams& policy, const SimConfig& sim, const TrainConfig& config) {
  RolloutOptions opts{config.steps, config.potential};
  double sum = 0.0;
  for (int e = 0; e < config.validation_episodes; ++e) {
    SimConfig s = sim;
    s.rng_seed = config.validation_seed + static_cast<std::uint64_t>(e);
    ExpertController expert(config.potential);
    PolicyController learned(policy);
    const Episode ref = run_episode(s, expert, opts);
    const Episode ep = run_episode(s, learned, opts);
    if (ep.diverged || ref.diverged) {
      sum += 10.0 * kFlockingSuccessThreshold;
    } else {
      sum += relative_cost(episode_cost(ep), episode_cost(ref));
    }
  }
  return sum / config.validation_episodes;
}

TrainResult train(const PolicyConfig& policy_config, const SimConfig& sim, const TrainConfig& config,
                  std::ostream* progress) {
  config.validate();
  sim.validate();
  Rng rng(config.seed);
  TrainResult result;
  result.last = make_policy(policy_config, rng);
  PolicyParams& policy = result.last;
  auto optimizer = make_optimizer_state(policy.params(), {config.learning_rate});
  const RolloutOptions opts{config.steps, config.potential};

  RolloutDataset data;
  data.sim = sim;
  std::uint64_t next_seed = config.episode_seed;
  result.best_validation = std::numeric_limits<double>::infinity();

  for (int round = 0; round < config.rounds; ++round) {
    for (int e = 0; e < config.episodes_per_round; ++e) {
      const bool learner_driven = round > 0 && rng.uniform() < config.learner_probability;
      SimConfig s = sim;
      s.rng_seed = next_seed++;
      data.episodes.push_back(collect_rollout(s, &policy, learner_driven, opts));
    }
    auto windows = make_windows(data, policy.config.depth);
    if (windows.empty()) throw std::runtime_error("train: no complete K-windows in the dataset");
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      for (std::size_t i = windows.size() - 1; i > 0; --i) std::swap(windows[i], windows[rng.index(i + 1)]);
      double sum = 0.0;
      for (std::size_t b = 0; b < windows.size(); b += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t len = std::min(windows.size() - b, static_cast<std::size_t>(config.batch_size));
        const std::span<const Window> batch(windows.data() + b, len);
        sum += bptt_update(policy, data, batch, optimizer) * static_cast<double>(len);
      }
      TrainLogEntry entry{round, epoch, static_cast<int>(windows.size()), sum / static_cast<double>(windows.size()), -1.0};
      if (epoch + 1 == config.epochs) entry.validation = validation_cost(policy, sim, config);
      result.log.push_back(entry);
      if (progress) {
        *progress << "round " << round << " epoch " << epoch << " windows " << entry.windows << " loss " << entry.loss;
        if (entry.validation >= 0.0) *progress << " validation " << entry.validation;
        *progress << std::endl;
      }
    }
    const double val = result.log.back().validation;
    if (val < result.best_validation) {
      result.best_validation = val;
      result.best_round = round;
      result.best = policy;
    }
  }
  return result;
}

void write_train_log(std::ostream& out, std::span<const TrainLogEntry> log) {
  for (const auto& e : log) {
    out << "{\"round\":" << e.round << ",\"epoch\":" << e.epoch << ",\"windows\":" << e.windows
        << ",\"loss\":" << nn::format_double(e.loss) << ",\"validation\":";
    if (e.validation >= 0.0) out << nn::format_double(e.validation);
    else out << "null";
    out << "}\n";
  }
}

}  // namespace vgai
