// vgai: simulate, train, evaluate, sweep and export from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vgai/experiment.hpp"
#include "vgai/trainer.hpp"
#include "vgai/vision.hpp"

using namespace vgai;

namespace {

struct SimFlags {
  SimConfig sim;
  std::string file;

  void add(CLI::App* app) {
    app->add_option("--sim-config", file, "key = value simulation config (flags override it)");
    app->add_option("--n-agents,-n", sim.n_agents, "team size N")->capture_default_str();
    app->add_option("--comm-radius,-R", sim.comm_radius, "communication radius [m]")->capture_default_str();
    app->add_option("--dt", sim.dt, "sampling time [s]")->capture_default_str();
    app->add_option("--v-init", sim.v_init, "initial velocity bound [m/s]")->capture_default_str();
    app->add_option("--accel-limit", sim.accel_limit, "per-component saturation [m/s^2]")->capture_default_str();
    app->add_option("--min-init-spacing", sim.min_init_spacing)->capture_default_str();
    app->add_option("--seed", sim.rng_seed, "episode seed")->capture_default_str();
    app->add_option("--max-init-attempts", sim.max_init_attempts)->capture_default_str();
    app->add_option("--require-connected", sim.require_connected, "reject disconnected initial graphs")
        ->capture_default_str();
  }

  // File values first, then anything given on the command line.
  SimConfig resolve(const CLI::App* app) const {
    if (file.empty()) return sim;
    SimConfig out = load_sim_config_file(file, SimConfig{});
    auto given = [&](const char* name) { return app->count(name) > 0; };
    if (given("--n-agents")) out.n_agents = sim.n_agents;
    if (given("--comm-radius")) out.comm_radius = sim.comm_radius;
    if (given("--dt")) out.dt = sim.dt;
    if (given("--v-init")) out.v_init = sim.v_init;
    if (given("--accel-limit")) out.accel_limit = sim.accel_limit;
    if (given("--min-init-spacing")) out.min_init_spacing = sim.min_init_spacing;
    if (given("--seed")) out.rng_seed = sim.rng_seed;
    if (given("--max-init-attempts")) out.max_init_attempts = sim.max_init_attempts;
    if (given("--require-connected")) out.require_connected = sim.require_connected;
    out.validate();
    return out;
  }
};

struct PolicyFlags {
  PolicyConfig policy;
  std::string mode = "handcrafted", gso = "degree", frame = "velocity";

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "handcrafted | vision")->capture_default_str();
    app->add_option("--K", policy.depth, "aggregation depth (exchanges + 1)")->capture_default_str();
    app->add_option("--F", policy.features, "feature width")->capture_default_str();
    app->add_option("--readout-hidden", policy.readout_hidden, "readout hidden widths")->delimiter(',')->capture_default_str();
    app->add_option("--gso", gso, "degree | adjacency | symmetric")->capture_default_str();
    app->add_option("--camera-width", policy.camera.width)->capture_default_str();
    app->add_option("--camera-height", policy.camera.height)->capture_default_str();
    app->add_option("--camera-max-distance", policy.camera.max_distance)->capture_default_str();
    app->add_option("--camera-half-width", policy.camera.half_width)->capture_default_str();
    app->add_option("--camera-frame", frame, "velocity | world")->capture_default_str();
    app->add_option("--motion-lag", policy.camera.motion_lag, "steps between stacked frames (0: single frame)")
        ->capture_default_str();
    app->add_option("--block-channels", policy.vision.block_channels)->delimiter(',')->capture_default_str();
    app->add_option("--block-strides", policy.vision.block_strides)->delimiter(',')->capture_default_str();
    app->add_option("--vision-hidden", policy.vision.hidden)->capture_default_str();
  }

  PolicyConfig resolve() const {
    PolicyConfig p = policy;
    p.mode = parse_policy_mode(mode);
    p.gso = parse_gso_normalization(gso);
    p.camera.frame = parse_camera_frame(frame);
    p.vision.features = p.features;
    p.validate();
    return p;
  }
};

std::unique_ptr<Controller> make_controller(ControllerKind kind, const PolicyParams* policy) {
  switch (kind) {
    case ControllerKind::kCentralized: return std::make_unique<ExpertController>();
    case ControllerKind::kLocal: return std::make_unique<LocalController>();
    default:
      if (!policy) throw std::runtime_error("learned controller needs --checkpoint");
      return std::make_unique<PolicyController>(*policy);
  }
}

std::vector<ControllerKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ControllerKind> out;
  for (const auto& n : names) out.push_back(parse_controller_kind(n));
  return out;
}

int run_simulate(const SimConfig& sim, const std::string& controller, const std::string& checkpoint, int steps,
                 const std::string& output, const std::string& format) {
  std::unique_ptr<PolicyParams> policy;
  if (!checkpoint.empty()) policy = std::make_unique<PolicyParams>(load_policy_file(checkpoint));
  auto ctrl = make_controller(parse_controller_kind(controller), policy.get());
  const RolloutOptions opts{steps, {}};
  const Episode ep = run_episode(sim, *ctrl, opts);
  ExpertController expert;
  const Episode ref = run_episode(sim, expert, opts);
  std::cout << "controller " << ctrl->name() << " seed " << sim.rng_seed << " steps " << ep.steps() << "\n";
  if (ep.diverged) std::cout << "diverged: " << ep.diagnostic << "\n";
  if (!ep.states.empty()) {
    std::cout << "initial variance " << velocity_variance(ep.states.front().velocities) << "\n";
    std::cout << "final variance " << velocity_variance(ep.states.back().velocities) << "\n";
    std::cout << "cost " << episode_cost(ep) << "\n";
    if (!ep.diverged && !ref.diverged) {
      std::cout << "relative cost " << relative_cost(episode_cost(ep), episode_cost(ref)) << "\n";
    }
  }
  if (!output.empty()) {
    export_trajectory_file(output, ep, parse_trajectory_format(format));
    std::cout << "trajectory written to " << output << "\n";
  }
  return ep.diverged ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vgai: decentralized flocking with graph aggregation and learned visual features"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run one episode under a controller");
  SimFlags sim_flags;
  sim_flags.add(sim_cmd);
  std::string sim_controller = "centralized", sim_checkpoint, sim_output, sim_format = "csv";
  int sim_steps = 100;
  sim_cmd->add_option("--controller,-c", sim_controller, "centralized | local | dagnn-state | vgai-vision")
      ->capture_default_str();
  sim_cmd->add_option("--checkpoint", sim_checkpoint, "policy checkpoint for learned controllers");
  sim_cmd->add_option("--steps", sim_steps)->capture_default_str();
  sim_cmd->add_option("--output,-o", sim_output, "also write the trajectory here");
  sim_cmd->add_option("--format", sim_format, "csv | jsonl")->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "DAGger imitation training of a policy");
  SimFlags train_sim;
  train_sim.add(train_cmd);
  PolicyFlags train_policy;
  train_policy.add(train_cmd);
  TrainConfig tc;
  std::string train_output = "policy.txt", train_log;
  train_cmd->add_option("--rounds", tc.rounds)->capture_default_str();
  train_cmd->add_option("--episodes-per-round", tc.episodes_per_round)->capture_default_str();
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--steps", tc.steps)->capture_default_str();
  train_cmd->add_option("--learner-probability", tc.learner_probability)->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--train-seed", tc.seed)->capture_default_str();
  train_cmd->add_option("--episode-seed", tc.episode_seed)->capture_default_str();
  train_cmd->add_option("--validation-episodes", tc.validation_episodes)->capture_default_str();
  train_cmd->add_option("--validation-seed", tc.validation_seed)->capture_default_str();
  train_cmd->add_option("--output,-o", train_output, "checkpoint path")->capture_default_str();
  train_cmd->add_option("--log", train_log, "JSON-lines training log");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "relative cost of controllers over seeds");
  SimFlags eval_sim;
  eval_sim.add(eval_cmd);
  std::vector<std::string> eval_controllers{"centralized", "local"};
  std::string eval_checkpoint, eval_vision_checkpoint, eval_jsonl;
  int eval_episodes = 10, eval_steps = 100;
  std::uint64_t eval_first_seed = 0;
  std::vector<int> eval_transfer;
  eval_cmd->add_option("--controllers", eval_controllers)->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "dagnn-state checkpoint");
  eval_cmd->add_option("--vision-checkpoint", eval_vision_checkpoint, "vgai-vision checkpoint");
  eval_cmd->add_option("--episodes", eval_episodes)->capture_default_str();
  eval_cmd->add_option("--first-seed", eval_first_seed)->capture_default_str();
  eval_cmd->add_option("--steps", eval_steps)->capture_default_str();
  eval_cmd->add_option("--transfer", eval_transfer, "team sizes to evaluate --checkpoint on")->delimiter(',');
  eval_cmd->add_option("--jsonl", eval_jsonl, "also write the report as JSON lines");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one axis (F, K, v_init, R, N)");
  SimFlags sweep_sim;
  sweep_sim.add(sweep_cmd);
  std::string sweep_axis = "R", sweep_checkpoint, sweep_vision_checkpoint, sweep_dir;
  std::vector<double> sweep_values{1.0, 1.5, 2.0};
  std::vector<std::string> sweep_controllers{"centralized", "local"};
  int sweep_episodes = 10, sweep_steps = 100;
  std::uint64_t sweep_first_seed = 0;
  sweep_cmd->add_option("--axis", sweep_axis, "F | K | v_init | R | N")->capture_default_str();
  sweep_cmd->add_option("--values", sweep_values)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--controllers", sweep_controllers)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--checkpoint", sweep_checkpoint, "dagnn-state checkpoint; {value} expands to the axis value");
  sweep_cmd->add_option("--vision-checkpoint", sweep_vision_checkpoint, "vgai-vision checkpoint; {value} expands");
  sweep_cmd->add_option("--episodes", sweep_episodes)->capture_default_str();
  sweep_cmd->add_option("--first-seed", sweep_first_seed)->capture_default_str();
  sweep_cmd->add_option("--steps", sweep_steps)->capture_default_str();
  sweep_cmd->add_option("--output-dir", sweep_dir, "write report.txt and report.jsonl here");

  // export
  auto* export_cmd = app.add_subcommand("export", "write an episode trajectory or an agent's rendered view");
  SimFlags export_sim;
  export_sim.add(export_cmd);
  PolicyFlags export_camera;
  export_camera.add(export_cmd);
  std::string export_controller = "centralized", export_checkpoint, export_output, export_format = "csv";
  int export_steps = 100, export_agent = -1, export_step = 0;
  export_cmd->add_option("--controller,-c", export_controller)->capture_default_str();
  export_cmd->add_option("--checkpoint", export_checkpoint);
  export_cmd->add_option("--steps", export_steps)->capture_default_str();
  export_cmd->add_option("--format", export_format, "csv | jsonl | pgm")->capture_default_str();
  export_cmd->add_option("--agent", export_agent, "with --format pgm: whose view to dump");
  export_cmd->add_option("--at-step", export_step, "with --format pgm: step of the view")->capture_default_str();
  export_cmd->add_option("--output,-o", export_output, "output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim_cmd) {
      return run_simulate(sim_flags.resolve(sim_cmd), sim_controller, sim_checkpoint, sim_steps, sim_output,
                          sim_format);
    }
    if (*train_cmd) {
      const SimConfig sim = train_sim.resolve(train_cmd);
      const TrainResult res = train(train_policy.resolve(), sim, tc, &std::cerr);
      save_policy_file(train_output, res.best);
      if (!train_log.empty()) {
        std::ofstream log(train_log);
        write_train_log(log, res.log);
      }
      std::cout << "best round " << res.best_round << " validation relative cost " << res.best_validation << "\n";
      std::cout << "checkpoint written to " << train_output << "\n";
      return 0;
    }
    if (*eval_cmd) {
      const SimConfig sim = eval_sim.resolve(eval_cmd);
      Report report;
      if (!eval_transfer.empty()) {
        if (eval_checkpoint.empty()) throw std::runtime_error("--transfer needs --checkpoint");
        report = transfer_eval(load_policy_file(eval_checkpoint), sim, eval_transfer, eval_episodes, eval_first_seed,
                               eval_steps);
      } else {
        ExperimentSpec spec;
        spec.sim = sim;
        spec.controllers = parse_kinds(eval_controllers);
        spec.episodes = eval_episodes;
        spec.first_seed = eval_first_seed;
        spec.steps = eval_steps;
        if (!eval_checkpoint.empty()) spec.checkpoints[ControllerKind::kDagnnState] = eval_checkpoint;
        if (!eval_vision_checkpoint.empty()) spec.checkpoints[ControllerKind::kVgaiVision] = eval_vision_checkpoint;
        report = run_experiment(spec);
      }
      write_report_table(std::cout, report);
      if (!eval_jsonl.empty()) {
        std::ofstream out(eval_jsonl);
        write_report_jsonl(out, report);
      }
      return 0;
    }
    if (*sweep_cmd) {
      ExperimentSpec spec;
      spec.sim = sweep_sim.resolve(sweep_cmd);
      spec.axis = parse_sweep_axis(sweep_axis);
      spec.values = sweep_values;
      spec.controllers = parse_kinds(sweep_controllers);
      spec.episodes = sweep_episodes;
      spec.first_seed = sweep_first_seed;
      spec.steps = sweep_steps;
      if (!sweep_checkpoint.empty()) spec.checkpoints[ControllerKind::kDagnnState] = sweep_checkpoint;
      if (!sweep_vision_checkpoint.empty()) spec.checkpoints[ControllerKind::kVgaiVision] = sweep_vision_checkpoint;
      if (!sweep_dir.empty()) {
        std::filesystem::create_directories(sweep_dir);
        spec.output_dir = sweep_dir;
      }
      const Report report = run_experiment(spec);
      write_report_table(std::cout, report);
      return 0;
    }
    if (*export_cmd) {
      const SimConfig sim = export_sim.resolve(export_cmd);
      std::unique_ptr<PolicyParams> policy;
      if (!export_checkpoint.empty()) policy = std::make_unique<PolicyParams>(load_policy_file(export_checkpoint));
      auto ctrl = make_controller(parse_controller_kind(export_controller), policy.get());
      const int steps = export_format == "pgm" ? export_step : export_steps;
      const Episode ep = run_episode(sim, *ctrl, RolloutOptions{steps, {}});
      if (export_format == "pgm") {
        if (export_agent < 0) throw std::runtime_error("--format pgm needs --agent");
        const CameraConfig cam = policy ? policy->config.camera : export_camera.resolve().camera;
        std::ofstream out(export_output, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + export_output);
        const Observation obs = render_from_history(ep.states, export_agent, cam);
        write_pgm(out, obs, 0);
      } else {
        export_trajectory_file(export_output, ep, parse_trajectory_format(export_format));
      }
      std::cout << "wrote " << export_output << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
