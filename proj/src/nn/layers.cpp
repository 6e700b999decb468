#include "vgai/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace vgai::nn {

namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

void require_rank3(const Tensor& x, const char* who) {
  if (x.rank() != 3) throw std::invalid_argument(std::string(who) + ": expected {C, H, W} input, got " + x.shape_string());
}

Tensor relu_of(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

// grad * 1[x > 0]
Tensor relu_mask(const Tensor& grad, const Tensor& x) {
  Tensor g = grad;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense:
      return "dense";
    case LayerKind::kConv:
      return "conv";
    case LayerKind::kResidualBlock:
      return "residual-block";
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kVerticalAvgPool:
      return "vertical-avgpool";
    case LayerKind::kFlatten:
      return "flatten";
  }
  return "dense";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto k : {LayerKind::kDense, LayerKind::kConv, LayerKind::kResidualBlock, LayerKind::kRelu,
                 LayerKind::kVerticalAvgPool, LayerKind::kFlatten}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown layer kind: " + std::string(name));
}

// ---- Dense ----

Dense::Dense(int in, int out)
    : in_(in), out_(out), weight_("weight", Tensor({out, in})), bias_("bias", Tensor({out})) {
  if (in < 1 || out < 1) throw std::invalid_argument("Dense: widths must be positive");
}

Tensor Dense::forward(const Tensor& x, LayerCache& cache) const {
  if (static_cast<int>(x.size()) != in_) {
    throw std::invalid_argument("Dense: input size " + std::to_string(x.size()) + " != " + std::to_string(in_));
  }
  Tensor y({out_});
  const double* w = weight_.value.data();
  const double* xv = x.data();
  for (int o = 0; o < out_; ++o) {
    double acc = bias_.value[static_cast<std::size_t>(o)];
    const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in_);
    for (int i = 0; i < in_; ++i) acc += row[i] * xv[i];
    y[static_cast<std::size_t>(o)] = acc;
  }
  cache.saved = {x};
  cache.input_shape = x.shape();
  return y;
}

Tensor Dense::backward(const Tensor& grad_out, const LayerCache& cache) {
  if (static_cast<int>(grad_out.size()) != out_) throw std::invalid_argument("Dense::backward: gradient size");
  const Tensor& x = cache.saved.at(0);
  Tensor gx(cache.input_shape);
  double* gw = weight_.grad.data();
  const double* w = weight_.value.data();
  for (int o = 0; o < out_; ++o) {
    const double g = grad_out[static_cast<std::size_t>(o)];
    bias_.grad[static_cast<std::size_t>(o)] += g;
    if (g == 0.0) continue;
    const std::size_t off = static_cast<std::size_t>(o) * static_cast<std::size_t>(in_);
    for (int i = 0; i < in_; ++i) {
      gw[off + static_cast<std::size_t>(i)] += g * x[static_cast<std::size_t>(i)];
      gx[static_cast<std::size_t>(i)] += w[off + static_cast<std::size_t>(i)] * g;
    }
  }
  return gx;
}

// ---- Conv2d ----

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride_h, int stride_w, int padding)
    : cin_(in_channels),
      cout_(out_channels),
      kernel_(kernel),
      sh_(stride_h),
      sw_(stride_w),
      pad_(padding),
      weight_("weight", Tensor({out_channels, in_channels, kernel, kernel})),
      bias_("bias", Tensor({out_channels})) {
  if (cin_ < 1 || cout_ < 1 || kernel_ < 1 || sh_ < 1 || sw_ < 1 || pad_ < 0) {
    throw std::invalid_argument("Conv2d: invalid geometry");
  }
}

std::vector<int> Conv2d::output_shape(const std::vector<int>& in) const {
  if (in.size() != 3 || in[0] != cin_) throw std::invalid_argument("Conv2d: input channels do not match");
  const int ho = (in[1] + 2 * pad_ - kernel_) / sh_ + 1;
  const int wo = (in[2] + 2 * pad_ - kernel_) / sw_ + 1;
  if (in[1] + 2 * pad_ < kernel_ || in[2] + 2 * pad_ < kernel_ || ho < 1 || wo < 1) {
    throw std::invalid_argument("Conv2d: kernel does not fit the padded input");
  }
  return {cout_, ho, wo};
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

struct ConvGeometry {
  int cin, kernel, sh, sw, pad, h, w, ho, wo;
};

// Rows (ci, kh, kw), columns (oh, ow); out-of-range taps stay zero.
RowMatrix im2col(const Tensor& x, const ConvGeometry& g) {
  RowMatrix col = RowMatrix::Zero(static_cast<Eigen::Index>(g.cin) * g.kernel * g.kernel,
                                  static_cast<Eigen::Index>(g.ho) * g.wo);
  for (int ci = 0; ci < g.cin; ++ci) {
    for (int kh = 0; kh < g.kernel; ++kh) {
      const int oh_lo = std::max(0, ceil_div(g.pad - kh, g.sh));
      const int oh_hi = std::min(g.ho - 1, floor_div(g.h - 1 + g.pad - kh, g.sh));
      for (int kw = 0; kw < g.kernel; ++kw) {
        const int ow_lo = std::max(0, ceil_div(g.pad - kw, g.sw));
        const int ow_hi = std::min(g.wo - 1, floor_div(g.w - 1 + g.pad - kw, g.sw));
        double* row = col.row((static_cast<Eigen::Index>(ci) * g.kernel + kh) * g.kernel + kw).data();
        for (int oh = oh_lo; oh <= oh_hi; ++oh) {
          const double* xr = x.ptr(ci, oh * g.sh - g.pad + kh, 0);
          double* cr = row + static_cast<std::size_t>(oh) * static_cast<std::size_t>(g.wo);
          for (int ow = ow_lo; ow <= ow_hi; ++ow) cr[ow] = xr[ow * g.sw - g.pad + kw];
        }
      }
    }
  }
  return col;
}

// Adjoint of im2col: scatters column gradients back onto the input.
void col2im(const RowMatrix& col, const ConvGeometry& g, Tensor& gx) {
  for (int ci = 0; ci < g.cin; ++ci) {
    for (int kh = 0; kh < g.kernel; ++kh) {
      const int oh_lo = std::max(0, ceil_div(g.pad - kh, g.sh));
      const int oh_hi = std::min(g.ho - 1, floor_div(g.h - 1 + g.pad - kh, g.sh));
      for (int kw = 0; kw < g.kernel; ++kw) {
        const int ow_lo = std::max(0, ceil_div(g.pad - kw, g.sw));
        const int ow_hi = std::min(g.wo - 1, floor_div(g.w - 1 + g.pad - kw, g.sw));
        const double* row = col.row((static_cast<Eigen::Index>(ci) * g.kernel + kh) * g.kernel + kw).data();
        for (int oh = oh_lo; oh <= oh_hi; ++oh) {
          double* gr = gx.ptr(ci, oh * g.sh - g.pad + kh, 0);
          const double* cr = row + static_cast<std::size_t>(oh) * static_cast<std::size_t>(g.wo);
          for (int ow = ow_lo; ow <= ow_hi; ++ow) gr[ow * g.sw - g.pad + kw] += cr[ow];
        }
      }
    }
  }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, LayerCache& cache) const {
  require_rank3(x, "Conv2d");
  const auto out_shape = output_shape(x.shape());
  const ConvGeometry g{cin_, kernel_, sh_, sw_, pad_, x.dim(1), x.dim(2), out_shape[1], out_shape[2]};
  const RowMatrix col = im2col(x, g);
  const Eigen::Index taps = static_cast<Eigen::Index>(cin_) * kernel_ * kernel_;
  const Eigen::Index pixels = static_cast<Eigen::Index>(g.ho) * g.wo;
  Tensor y(out_shape);
  MutMap ym(y.data(), cout_, pixels);
  ym.noalias() = ConstMap(weight_.value.data(), cout_, taps) * col;
  ym.colwise() += Eigen::Map<const Eigen::VectorXd>(bias_.value.data(), cout_);
  cache.saved = {x};
  cache.input_shape = x.shape();
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out, const LayerCache& cache) {
  const Tensor& x = cache.saved.at(0);
  const auto out_shape = output_shape(x.shape());
  if (grad_out.shape() != out_shape) throw std::invalid_argument("Conv2d::backward: gradient shape");
  const ConvGeometry g{cin_, kernel_, sh_, sw_, pad_, x.dim(1), x.dim(2), out_shape[1], out_shape[2]};
  const Eigen::Index taps = static_cast<Eigen::Index>(cin_) * kernel_ * kernel_;
  const Eigen::Index pixels = static_cast<Eigen::Index>(g.ho) * g.wo;
  const ConstMap gy(grad_out.data(), cout_, pixels);
  const RowMatrix col = im2col(x, g);
  Eigen::Map<Eigen::VectorXd>(bias_.grad.data(), cout_) += gy.rowwise().sum();
  MutMap(weight_.grad.data(), cout_, taps).noalias() += gy * col.transpose();
  const RowMatrix gcol = ConstMap(weight_.value.data(), cout_, taps).transpose() * gy;
  Tensor gx(x.shape());
  col2im(gcol, g, gx);
  return gx;
}

// ---- ResidualBlock ----

ResidualBlock::ResidualBlock(int in_channels, int out_channels, int stride_w)
    : cin_(in_channels),
      cout_(out_channels),
      stride_w_(stride_w),
      conv_a_(in_channels, out_channels, 3, 1, stride_w, 1),
      conv_b_(out_channels, out_channels, 3, 1, 1, 1) {
  if (in_channels != out_channels || stride_w != 1) projection_.emplace(in_channels, out_channels, 1, 1, stride_w, 0);
}

std::vector<Param*> ResidualBlock::params() {
  std::vector<Param*> out = conv_a_.params();
  for (Param* p : conv_b_.params()) out.push_back(p);
  if (projection_) {
    for (Param* p : projection_->params()) out.push_back(p);
  }
  return out;
}

Tensor ResidualBlock::forward(const Tensor& x, LayerCache& cache) const {
  require_rank3(x, "ResidualBlock");
  LayerCache scratch;
  Tensor a1 = conv_a_.forward(x, scratch);
  Tensor h1 = relu_of(a1);
  Tensor pre = conv_b_.forward(h1, scratch);
  if (projection_) {
    pre += projection_->forward(x, scratch);
  } else {
    pre += x;
  }
  Tensor out = relu_of(pre);
  cache.input_shape = x.shape();
  cache.saved = {x, std::move(a1), std::move(h1), std::move(pre)};
  return out;
}

Tensor ResidualBlock::backward(const Tensor& grad_out, const LayerCache& cache) {
  const Tensor& x = cache.saved.at(0);
  const Tensor& a1 = cache.saved.at(1);
  const Tensor& h1 = cache.saved.at(2);
  const Tensor& pre = cache.saved.at(3);
  const Tensor g_pre = relu_mask(grad_out, pre);
  const Tensor g_h1 = conv_b_.backward(g_pre, LayerCache{{h1}, h1.shape()});
  Tensor gx = conv_a_.backward(relu_mask(g_h1, a1), LayerCache{{x}, x.shape()});
  if (projection_) {
    gx += projection_->backward(g_pre, LayerCache{{x}, x.shape()});
  } else {
    gx += g_pre;
  }
  return gx;
}

// ---- parameter-free layers ----

Tensor Relu::forward(const Tensor& x, LayerCache& cache) const {
  cache.saved = {x};
  cache.input_shape = x.shape();
  return relu_of(x);
}

Tensor Relu::backward(const Tensor& grad_out, const LayerCache& cache) const {
  return relu_mask(grad_out, cache.saved.at(0));
}

Tensor VerticalAvgPool::forward(const Tensor& x, LayerCache& cache) const {
  require_rank3(x, "VerticalAvgPool");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h == 0) throw std::invalid_argument("VerticalAvgPool: zero height");
  Tensor y({c, 1, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int row = 0; row < h; ++row) {
      for (int col = 0; col < w; ++col) y.at(ch, 0, col) += x.at(ch, row, col);
    }
    for (int col = 0; col < w; ++col) y.at(ch, 0, col) /= h;
  }
  cache.input_shape = x.shape();
  return y;
}

Tensor VerticalAvgPool::backward(const Tensor& grad_out, const LayerCache& cache) const {
  const int c = cache.input_shape[0], h = cache.input_shape[1], w = cache.input_shape[2];
  Tensor gx(cache.input_shape);
  for (int ch = 0; ch < c; ++ch) {
    for (int row = 0; row < h; ++row) {
      for (int col = 0; col < w; ++col) gx.at(ch, row, col) = grad_out.at(ch, 0, col) / h;
    }
  }
  return gx;
}

Tensor Flatten::forward(const Tensor& x, LayerCache& cache) const {
  cache.input_shape = x.shape();
  return x.reshaped({static_cast<int>(x.size())});
}

Tensor Flatten::backward(const Tensor& grad_out, const LayerCache& cache) const {
  return grad_out.reshaped(cache.input_shape);
}

// ---- Sequential ----

Layer make_layer(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::kDense:
      return Dense(s.in, s.out);
    case LayerKind::kConv:
      return Conv2d(s.in, s.out, s.kernel, s.stride_h, s.stride_w, s.padding);
    case LayerKind::kResidualBlock:
      return ResidualBlock(s.in, s.out, s.stride_w);
    case LayerKind::kRelu:
      return Relu{};
    case LayerKind::kVerticalAvgPool:
      return VerticalAvgPool{};
    case LayerKind::kFlatten:
      return Flatten{};
  }
  throw std::invalid_argument("make_layer: unknown kind");
}

Sequential::Sequential(const std::vector<LayerSpec>& specs) {
  layers_.reserve(specs.size());
  for (const auto& s : specs) layers_.push_back(make_layer(s));
}

Tensor Sequential::forward(const Tensor& x, Tape& tape) const {
  tape.assign(layers_.size(), LayerCache{});
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = std::visit([&](const auto& layer) { return layer.forward(h, tape[i]); }, layers_[i]);
  }
  return h;
}

Tensor Sequential::forward(const Tensor& x) const {
  Tape tape;
  return forward(x, tape);
}

Tensor Sequential::backward(const Tensor& grad_out, const Tape& tape) {
  if (tape.size() != layers_.size()) throw std::invalid_argument("Sequential::backward: tape does not match network");
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = std::visit([&](auto& layer) { return layer.backward(g, tape[i]); }, layers_[i]);
  }
  return g;
}

std::vector<LayerSpec> Sequential::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(std::visit([](const auto& layer) { return layer.spec(); }, l));
  return out;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    std::visit(
        [&](auto& layer) {
          if constexpr (requires { layer.params(); }) {
            for (Param* p : layer.params()) out.push_back(p);
          }
        },
        l);
  }
  return out;
}

std::vector<const Param*> Sequential::params() const {
  auto mutable_params = const_cast<Sequential*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

std::size_t Sequential::parameter_count() const {
  std::size_t n = 0;
  for (const Param* p : params()) n += p->value.size();
  return n;
}

void Sequential::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

void Sequential::initialize(Rng& rng) {
  for (Param* p : params()) {
    if (p->name == "bias") {
      p->value.fill(0.0);
      continue;
    }
    const auto& shape = p->value.shape();
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < shape.size(); ++d) fan_in *= static_cast<std::size_t>(shape[d]);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : p->value.values()) v = rng.uniform(-bound, bound);
  }
}

std::vector<int> infer_output_shape(const std::vector<LayerSpec>& specs, std::vector<int> shape) {
  for (const auto& s : specs) {
    switch (s.kind) {
      case LayerKind::kDense:
        if (static_cast<int>(shape_size(shape)) != s.in) {
          throw std::invalid_argument("dense layer expects " + std::to_string(s.in) + " inputs, got " +
                                      std::to_string(shape_size(shape)));
        }
        shape = {s.out};
        break;
      case LayerKind::kConv:
        shape = Conv2d(s.in, s.out, s.kernel, s.stride_h, s.stride_w, s.padding).output_shape(shape);
        break;
      case LayerKind::kResidualBlock:
        shape = Conv2d(s.in, s.out, 3, 1, s.stride_w, 1).output_shape(shape);
        break;
      case LayerKind::kRelu:
        break;
      case LayerKind::kVerticalAvgPool:
        if (shape.size() != 3 || shape[1] == 0) throw std::invalid_argument("vertical-avgpool expects {C, H, W}");
        shape[1] = 1;
        break;
      case LayerKind::kFlatten:
        shape = {static_cast<int>(shape_size(shape))};
        break;
    }
  }
  return shape;
}

}  // namespace vgai::nn
