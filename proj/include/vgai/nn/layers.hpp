#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vgai/nn/tensor.hpp"
#include "vgai/types.hpp"

namespace vgai::nn {

enum class LayerKind { kDense, kConv, kResidualBlock, kRelu, kVerticalAvgPool, kFlatten };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

// Size parameters of one layer. `in`/`out` are feature widths for dense
// layers and channel counts for convolutions and residual blocks.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int in = 0;
  int out = 0;
  int kernel = 3;
  int stride_h = 1;
  int stride_w = 1;
  int padding = 1;

  bool operator==(const LayerSpec&) const = default;
};

// Activations a layer keeps from forward for its backward pass.
struct LayerCache {
  std::vector<Tensor> saved;
  std::vector<int> input_shape;
};

// y = W x + b. Accepts any input whose size is `in`; returns shape {out}.
class Dense {
 public:
  Dense(int in, int out);

  Tensor forward(const Tensor& x, LayerCache& cache) const;
  // Accumulates dW, db; returns dL/dx shaped like the forward input.
  Tensor backward(const Tensor& grad_out, const LayerCache& cache);

  LayerSpec spec() const { return {LayerKind::kDense, in_, out_, 0, 1, 1, 0}; }
  std::vector<Param*> params() { return {&weight_, &bias_}; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  int in_, out_;
  Param weight_;  // {out, in}
  Param bias_;    // {out}
};

// Cross-correlation over {C, H, W} inputs with zero padding.
class Conv2d {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride_h, int stride_w, int padding);

  Tensor forward(const Tensor& x, LayerCache& cache) const;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache);

  std::vector<int> output_shape(const std::vector<int>& input_shape) const;
  LayerSpec spec() const { return {LayerKind::kConv, cin_, cout_, kernel_, sh_, sw_, pad_}; }
  std::vector<Param*> params() { return {&weight_, &bias_}; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  int cin_, cout_, kernel_, sh_, sw_, pad_;
  Param weight_;  // {cout, cin, k, k}
  Param bias_;    // {cout}
};

// out = relu(conv_b(relu(conv_a(x))) + skip(x)). conv_a carries the width
// stride; skip is the identity when shapes match and a strided 1x1
// projection otherwise.
class ResidualBlock {
 public:
  ResidualBlock(int in_channels, int out_channels, int stride_w);

  Tensor forward(const Tensor& x, LayerCache& cache) const;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache);

  LayerSpec spec() const { return {LayerKind::kResidualBlock, cin_, cout_, 3, 1, stride_w_, 1}; }
  std::vector<Param*> params();
  bool has_projection() const { return projection_.has_value(); }
  Conv2d& conv_a() { return conv_a_; }
  Conv2d& conv_b() { return conv_b_; }

 private:
  int cin_, cout_, stride_w_;
  Conv2d conv_a_;
  Conv2d conv_b_;
  std::optional<Conv2d> projection_;
};

class Relu {
 public:
  Tensor forward(const Tensor& x, LayerCache& cache) const;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) const;
  LayerSpec spec() const { return {LayerKind::kRelu, 0, 0, 0, 1, 1, 0}; }
};

// Mean over the height axis: {C, H, W} -> {C, 1, W}.
class VerticalAvgPool {
 public:
  Tensor forward(const Tensor& x, LayerCache& cache) const;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) const;
  LayerSpec spec() const { return {LayerKind::kVerticalAvgPool, 0, 0, 0, 1, 1, 0}; }
};

class Flatten {
 public:
  Tensor forward(const Tensor& x, LayerCache& cache) const;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) const;
  LayerSpec spec() const { return {LayerKind::kFlatten, 0, 0, 0, 1, 1, 0}; }
};

using Layer = std::variant<Dense, Conv2d, ResidualBlock, Relu, VerticalAvgPool, Flatten>;

Layer make_layer(const LayerSpec& spec);

// Everything Sequential::forward keeps for backward.
using Tape = std::vector<LayerCache>;

// Fixed stack of layers with explicit backward.
class Sequential {
 public:
  Sequential() = default;
  explicit Sequential(const std::vector<LayerSpec>& specs);

  Tensor forward(const Tensor& x, Tape& tape) const;
  Tensor forward(const Tensor& x) const;
  // Accumulates parameter gradients and returns dL/dx.
  Tensor backward(const Tensor& grad_out, const Tape& tape);

  std::vector<LayerSpec> specs() const;
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::size_t parameter_count() const;
  void zero_grad();
  // He-uniform weights, zero biases.
  void initialize(Rng& rng);

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  bool empty() const { return layers_.empty(); }

 private:
  std::vector<Layer> layers_;
};

// Shape a {C, H, W} (or flat) input has after running through `specs`;
// throws std::invalid_argument when consecutive layers do not compose.
std::vector<int> infer_output_shape(const std::vector<LayerSpec>& specs, std::vector<int> input_shape);

}  // namespace vgai::nn
