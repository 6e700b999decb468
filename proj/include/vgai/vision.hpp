#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "vgai/nn/layers.hpp"
#include "vgai/swarm.hpp"

namespace vgai {

// Orientation of the panorama: aligned with the agent's velocity (body
// camera) or with the world x-axis (compass-stabilized gimbal).
enum class CameraFrame { kVelocity, kWorld };

CameraFrame parse_camera_frame(std::string_view tag);
std::string_view to_string(CameraFrame frame);

// Synthetic 360-degree inverse-depth panorama. The width is split into four
// 90-degree views; the image center column looks along the camera heading.
struct CameraConfig {
  int width = 128;
  int height = 32;
  double max_distance = 3.0;  // [m]
  double half_width = 0.1;    // angular half-width of a rendered agent [rad]
  CameraFrame frame = CameraFrame::kVelocity;
  // When > 0, a second channel holds the same view of the configuration
  // `motion_lag` steps earlier (frame stacking), rendered in the current
  // camera orientation.
  int motion_lag = 0;

  int channels() const { return motion_lag > 0 ? 2 : 1; }
  std::vector<int> image_shape() const { return {channels(), height, width}; }
  void validate() const;

  bool operator==(const CameraConfig&) const = default;
};

// Camera-to-world rotation angle for `agent`. Velocity frame falls back to
// the world x-axis below 1e-6 m/s.
double camera_heading(const SwarmState& state, int agent, const CameraConfig& cam);

struct Observation {
  nn::Tensor image;  // {C, H, W}, values in [0, 1]
};

// Each other agent within max_distance paints a full-height bar centered on
// its bearing column, spanning max(1, round(half_width * W / 2pi)) - 1
// columns to each side, with intensity 1 - d / max_distance. Columns keep
// the brightest (nearest) value. Bearing b maps to column floor(W/2 + b W / 2pi).
Observation render_observation(const SwarmState& state, int agent, const CameraConfig& cam);

// Two-channel form: channel 0 from `state`, channel 1 from `lagged`, both in
// the camera orientation of `state`. Requires cam.motion_lag > 0.
Observation render_observation(const SwarmState& state, const SwarmState& lagged, int agent,
                               const CameraConfig& cam);

// Renders agent's observation at history.back(), taking the lagged frame
// from history (clamped to the first state).
Observation render_from_history(std::span<const SwarmState> history, int agent, const CameraConfig& cam);

// 8-bit binary PGM of one channel, for eyeballing.
void write_pgm(std::ostream& out, const Observation& obs, int channel = 0);

// Shape of the visual state estimator: residual blocks, vertical average
// pooling, flatten, then two dense layers ending in F outputs.
struct VisionConfig {
  int features = 24;
  std::vector<int> block_channels{4, 8, 8, 8};
  std::vector<int> block_strides{1, 2, 1, 2};  // along the width axis
  int hidden = 32;

  bool operator==(const VisionConfig&) const = default;
};

std::vector<nn::LayerSpec> vision_layer_specs(const CameraConfig& cam, const VisionConfig& vision);

// Forward pass of the estimator; fills `tape` for a later backward.
nn::Tensor visual_state_estimate(const Observation& obs, const nn::Sequential& psi, nn::Tape& tape);
nn::Tensor visual_state_estimate(const Observation& obs, const nn::Sequential& psi);

}  // namespace vgai
