#include "vgai/vision.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace vgai {

CameraFrame parse_camera_frame(std::string_view tag) {
  if (tag == "velocity") return CameraFrame::kVelocity;
  if (tag == "world") return CameraFrame::kWorld;
  throw std::invalid_argument("unknown camera frame: " + std::string(tag));
}

std::string_view to_string(CameraFrame frame) {
  return frame == CameraFrame::kWorld ? "world" : "velocity";
}

void CameraConfig::validate() const {
  if (width < 4 || width % 4 != 0) throw std::invalid_argument("CameraConfig: width must be a positive multiple of 4");
  if (height < 1) throw std::invalid_argument("CameraConfig: height must be >= 1");
  if (!(max_distance > 0.0)) throw std::invalid_argument("CameraConfig: max_distance must be > 0");
  if (!(half_width >= 0.0)) throw std::invalid_argument("CameraConfig: half_width must be >= 0");
  if (motion_lag < 0) throw std::invalid_argument("CameraConfig: motion_lag must be >= 0");
}

double camera_heading(const SwarmState& state, int agent, const CameraConfig& cam) {
  if (cam.frame == CameraFrame::kWorld) return 0.0;
  const Vec2 v = state.velocities.row(agent).transpose();
  if (v.norm() < 1e-6) return 0.0;
  return std::atan2(v.y(), v.x());
}

namespace {

void check_agent(const SwarmState& state, int agent) {
  if (agent < 0 || agent >= state.size()) throw std::out_of_range("render_observation: agent index");
}

// Paints one channel of `image` with the view from `positions.row(agent)`.
void paint(nn::Tensor& image, int channel, const Points& positions, int agent, double heading,
           const CameraConfig& cam) {
  const int w = cam.width;
  const double two_pi = 2.0 * std::numbers::pi;
  const int reach = std::max(1, static_cast<int>(std::lround(cam.half_width * w / two_pi))) - 1;
  std::vector<double> row(static_cast<std::size_t>(w), 0.0);
  const Vec2 self = positions.row(agent).transpose();
  for (int j = 0; j < positions.rows(); ++j) {
    if (j == agent) continue;
    const Vec2 rel = positions.row(j).transpose() - self;
    const double d = rel.norm();
    if (d > cam.max_distance) continue;
    const double value = std::clamp(1.0 - d / cam.max_distance, 0.0, 1.0);
    const double bearing = std::atan2(rel.y(), rel.x()) - heading;
    const double column = 0.5 * w + bearing / two_pi * w;
    const long center = static_cast<long>(std::floor(column));
    for (long k = center - reach; k <= center + reach; ++k) {
      const auto c = static_cast<std::size_t>(((k % w) + w) % w);
      row[c] = std::max(row[c], value);
    }
  }
  for (int h = 0; h < cam.height; ++h) {
    std::copy(row.begin(), row.end(), image.ptr(channel, h, 0));
  }
}

}  // namespace

Observation render_observation(const SwarmState& state, int agent, const CameraConfig& cam) {
  cam.validate();
  check_agent(state, agent);
  Observation obs{nn::Tensor({1, cam.height, cam.width})};
  paint(obs.image, 0, state.positions, agent, camera_heading(state, agent, cam), cam);
  return obs;
}

Observation render_observation(const SwarmState& state, const SwarmState& lagged, int agent,
                               const CameraConfig& cam) {
  cam.validate();
  if (cam.motion_lag < 1) throw std::invalid_argument("render_observation: lagged frame needs motion_lag > 0");
  check_agent(state, agent);
  if (lagged.size() != state.size()) throw std::invalid_argument("render_observation: lagged agent count");
  Observation obs{nn::Tensor({2, cam.height, cam.width})};
  const double heading = camera_heading(state, agent, cam);
  paint(obs.image, 0, state.positions, agent, heading, cam);
  paint(obs.image, 1, lagged.positions, agent, heading, cam);
  return obs;
}

Observation render_from_history(std::span<const SwarmState> history, int agent, const CameraConfig& cam) {
  if (history.empty()) throw std::invalid_argument("render_from_history: empty history");
  const SwarmState& now = history.back();
  if (cam.motion_lag == 0) return render_observation(now, agent, cam);
  const std::size_t last = history.size() - 1;
  const std::size_t lag = std::min(last, static_cast<std::size_t>(cam.motion_lag));
  return render_observation(now, history[last - lag], agent, cam);
}

void write_pgm(std::ostream& out, const Observation& obs, int channel) {
  const auto& img = obs.image;
  if (img.rank() != 3 || channel < 0 || channel >= img.dim(0)) throw std::invalid_argument("write_pgm: bad channel");
  out << "P5\n" << img.dim(2) << ' ' << img.dim(1) << "\n255\n";
  for (int h = 0; h < img.dim(1); ++h) {
    for (int w = 0; w < img.dim(2); ++w) {
      const double v = std::clamp(img.at(channel, h, w), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

std::vector<nn::LayerSpec> vision_layer_specs(const CameraConfig& cam, const VisionConfig& vision) {
  cam.validate();
  if (vision.features < 1) throw std::invalid_argument("VisionConfig: features must be >= 1");
  if (vision.block_channels.empty() || vision.block_channels.size() != vision.block_strides.size()) {
    throw std::invalid_argument("VisionConfig: block_channels and block_strides must be nonempty and equal length");
  }
  if (vision.hidden < 1) throw std::invalid_argument("VisionConfig: hidden must be >= 1");
  std::vector<nn::LayerSpec> specs;
  int channels = cam.channels();
  for (std::size_t b = 0; b < vision.block_channels.size(); ++b) {
    specs.push_back({nn::LayerKind::kResidualBlock, channels, vision.block_channels[b], 3, 1, vision.block_strides[b], 1});
    channels = vision.block_channels[b];
  }
  specs.push_back({nn::LayerKind::kVerticalAvgPool, 0, 0, 0, 1, 1, 0});
  specs.push_back({nn::LayerKind::kFlatten, 0, 0, 0, 1, 1, 0});
  const auto pooled = nn::infer_output_shape(specs, cam.image_shape());
  const int flat = static_cast<int>(nn::shape_size(pooled));
  specs.push_back({nn::LayerKind::kDense, flat, vision.hidden, 0, 1, 1, 0});
  specs.push_back({nn::LayerKind::kRelu, 0, 0, 0, 1, 1, 0});
  specs.push_back({nn::LayerKind::kDense, vision.hidden, vision.features, 0, 1, 1, 0});
  return specs;
}

nn::Tensor visual_state_estimate(const Observation& obs, const nn::Sequential& psi, nn::Tape& tape) {
  return psi.forward(obs.image, tape);
}

nn::Tensor visual_state_estimate(const Observation& obs, const nn::Sequential& psi) {
  return psi.forward(obs.image);
}

}  // namespace vgai
