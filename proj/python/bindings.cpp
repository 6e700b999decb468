#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vgai/comm_graph.hpp"
#include "vgai/controllers.hpp"
#include "vgai/experiment.hpp"
#include "vgai/swarm.hpp"
#include "vgai/trainer.hpp"
#include "vgai/vision.hpp"

namespace py = pybind11;
using namespace vgai;

namespace {

Matrix image_channel(const nn::Tensor& img, int c) {
  Matrix m(img.dim(1), img.dim(2));
  for (int h = 0; h < img.dim(1); ++h)
    for (int w = 0; w < img.dim(2); ++w) m(h, w) = img.at(c, h, w);
  return m;
}

std::unique_ptr<Controller> controller_for(const std::string& name, const PolicyParams* policy) {
  const auto kind = parse_controller_kind(name);
  if (kind == ControllerKind::kCentralized) return std::make_unique<ExpertController>();
  if (kind == ControllerKind::kLocal) return std::make_unique<LocalController>();
  if (!policy) throw std::invalid_argument("learned controller needs a policy");
  return std::make_unique<PolicyController>(*policy);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Flocking simulation, graph aggregation and imitation-learned policies";

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("n_agents", &SimConfig::n_agents)
      .def_readwrite("comm_radius", &SimConfig::comm_radius)
      .def_readwrite("dt", &SimConfig::dt)
      .def_readwrite("v_init", &SimConfig::v_init)
      .def_readwrite("accel_limit", &SimConfig::accel_limit)
      .def_readwrite("min_init_spacing", &SimConfig::min_init_spacing)
      .def_readwrite("rng_seed", &SimConfig::rng_seed)
      .def_readwrite("max_init_attempts", &SimConfig::max_init_attempts)
      .def_readwrite("require_connected", &SimConfig::require_connected)
      .def("validate", &SimConfig::validate);

  py::class_<SwarmState>(m, "SwarmState")
      .def(py::init<>())
      .def_readwrite("t", &SwarmState::t)
      .def_readwrite("positions", &SwarmState::positions)
      .def_readwrite("velocities", &SwarmState::velocities)
      .def_readwrite("accelerations", &SwarmState::accelerations)
      .def("size", &SwarmState::size);

  m.def("init_swarm", [](const SimConfig& c) {
    Rng rng(c.rng_seed);
    return init_swarm(c, rng);
  }, py::arg("config"), "Initial state drawn from config.rng_seed");
  m.def("validate_initialization", &validate_initialization);
  m.def("step_dynamics", &step_dynamics, py::arg("state"), py::arg("actions"), py::arg("dt") = 0.01);
  m.def("saturate", &saturate, py::arg("actions"), py::arg("limit") = 30.0);

  m.def("centralized_expert", [](const SwarmState& s, double rho) { return centralized_expert(s, {rho}); },
        py::arg("state"), py::arg("rho") = 1.0);
  m.def("local_heuristic", [](const SwarmState& s, double radius, double rho) {
    return local_heuristic(s, build_graph(s.positions, radius), {rho});
  }, py::arg("state"), py::arg("comm_radius"), py::arg("rho") = 1.0);
  m.def("velocity_variance", &velocity_variance);
  m.def("relative_cost", &relative_cost);
  m.def("handcrafted_state", [](const SwarmState& s, double radius) {
    return handcrafted_state(s, build_graph(s.positions, radius));
  }, py::arg("state"), py::arg("comm_radius"));

  m.def("adjacency", [](const Points& positions, double radius) {
    return gso(build_graph(positions, radius), GsoNormalization::kAdjacency).weights;
  }, py::arg("positions"), py::arg("comm_radius"));
  m.def("gso", [](const Points& positions, double radius, const std::string& norm) {
    return gso(build_graph(positions, radius), parse_gso_normalization(norm)).weights;
  }, py::arg("positions"), py::arg("comm_radius"), py::arg("normalization") = "degree");

  py::class_<AggregationBuffer>(m, "AggregationBuffer")
      .def(py::init<int, int, int>(), py::arg("depth"), py::arg("n_agents"), py::arg("features"))
      .def("update", [](AggregationBuffer& b, const Matrix& s, const Matrix& x) {
        b.update(GsoMatrix{s, GsoNormalization::kDegree}, x);
      }, py::arg("S"), py::arg("X"))
      .def("sequence", &AggregationBuffer::sequence)
      .def("block", [](const AggregationBuffer& b, int k) { return Matrix(b.block(k)); })
      .def_property_readonly("depth", &AggregationBuffer::depth)
      .def_property_readonly("steps", &AggregationBuffer::steps);

  py::class_<CameraConfig>(m, "CameraConfig")
      .def(py::init<>())
      .def_readwrite("width", &CameraConfig::width)
      .def_readwrite("height", &CameraConfig::height)
      .def_readwrite("max_distance", &CameraConfig::max_distance)
      .def_readwrite("half_width", &CameraConfig::half_width)
      .def_readwrite("motion_lag", &CameraConfig::motion_lag)
      .def_property("frame", [](const CameraConfig& c) { return std::string(to_string(c.frame)); },
                    [](CameraConfig& c, const std::string& f) { c.frame = parse_camera_frame(f); });

  m.def("render_observation", [](const SwarmState& s, int agent, const CameraConfig& cam) {
    return image_channel(render_observation(s, agent, cam).image, 0);
  }, py::arg("state"), py::arg("agent"), py::arg("camera"), "H x W inverse-depth panorama");

  py::class_<PolicyConfig>(m, "PolicyConfig")
      .def(py::init<>())
      .def_property("mode", [](const PolicyConfig& p) { return std::string(to_string(p.mode)); },
                    [](PolicyConfig& p, const std::string& v) { p.mode = parse_policy_mode(v); })
      .def_readwrite("depth", &PolicyConfig::depth)
      .def_readwrite("features", &PolicyConfig::features)
      .def_readwrite("readout_hidden", &PolicyConfig::readout_hidden)
      .def_readwrite("camera", &PolicyConfig::camera);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("rounds", &TrainConfig::rounds)
      .def_readwrite("episodes_per_round", &TrainConfig::episodes_per_round)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("learner_probability", &TrainConfig::learner_probability)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("validation_episodes", &TrainConfig::validation_episodes);

  py::class_<PolicyParams>(m, "Policy")
      .def_readonly("config", &PolicyParams::config)
      .def("parameter_count", &PolicyParams::parameter_count)
      .def("save", [](const PolicyParams& p, const std::string& path) { save_policy_file(path, p); })
      .def_static("load", &load_policy_file)
      .def("dumps", [](const PolicyParams& p) {
        std::ostringstream out;
        save_policy(out, p);
        return out.str();
      })
      .def("action", [](const PolicyParams& p, const Vector& z) {
        return dagnn_policy_action(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())), p.theta);
      }, py::arg("z"));

  m.def("make_policy", [](const PolicyConfig& c, std::uint64_t seed) {
    Rng rng(seed);
    return make_policy(c, rng);
  }, py::arg("config"), py::arg("seed") = 0);

  m.def("train", [](const PolicyConfig& pc, const SimConfig& sim, const TrainConfig& tc) {
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = train(pc, sim, tc);
    }
    py::list log;
    for (const auto& e : r.log) {
      py::dict d;
      d["round"] = e.round;
      d["epoch"] = e.epoch;
      d["loss"] = e.loss;
      d["validation"] = e.validation >= 0.0 ? py::object(py::float_(e.validation)) : py::object(py::none());
      log.append(d);
    }
    return py::make_tuple(r.best, log);
  }, py::arg("policy"), py::arg("sim"), py::arg("train"), "Returns (best policy, log records)");

  m.def("run_episode", [](const SimConfig& sim, const std::string& controller, const PolicyParams* policy,
                          int steps) {
    auto ctrl = controller_for(controller, policy);
    const Episode ep = run_episode(sim, *ctrl, RolloutOptions{steps, {}});
    py::dict d;
    d["states"] = ep.states;
    d["applied"] = ep.applied;
    d["expert"] = ep.expert;
    d["diverged"] = ep.diverged;
    d["cost"] = ep.states.empty() ? 0.0 : episode_cost(ep);
    return d;
  }, py::arg("sim"), py::arg("controller") = "centralized", py::arg("policy") = nullptr, py::arg("steps") = 100);

  m.def("evaluate", [](const SimConfig& sim, const std::vector<std::string>& controllers, const PolicyParams* policy,
                       int episodes, int steps) {
    std::vector<double> out;
    for (const auto& name : controllers) {
      auto ctrl = controller_for(name, policy);
      double sum = 0.0;
      for (int e = 0; e < episodes; ++e) {
        SimConfig s = sim;
        s.rng_seed = static_cast<std::uint64_t>(e);
        ExpertController expert;
        const double ref = episode_cost(run_episode(s, expert, {steps, {}}));
        sum += relative_cost(episode_cost(run_episode(s, *ctrl, {steps, {}})), ref);
      }
      out.push_back(sum / episodes);
    }
    return out;
  }, py::arg("sim"), py::arg("controllers"), py::arg("policy") = nullptr, py::arg("episodes") = 10,
     py::arg("steps") = 100, "Mean relative cost per controller over seeds 0..episodes-1");
}
