#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vgai::nn {

// Dense row-major array of doubles with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // 3D (channel, row, column) accessors.
  double& at(int c, int h, int w) { return values_[index(c, h, w)]; }
  double at(int c, int h, int w) const { return values_[index(c, h, w)]; }
  double* ptr(int c, int h, int w) { return values_.data() + index(c, h, w); }
  const double* ptr(int c, int h, int w) const { return values_.data() + index(c, h, w); }

  Tensor reshaped(std::vector<int> shape) const;
  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

  std::string shape_string() const;

 private:
  std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(shape_[1]) + static_cast<std::size_t>(h)) *
               static_cast<std::size_t>(shape_[2]) +
           static_cast<std::size_t>(w);
  }

  std::vector<int> shape_;
  std::vector<double> values_;
};

std::size_t shape_size(const std::vector<int>& shape);

// Trainable tensor with its gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}
  void zero_grad() { grad.fill(0.0); }
};

}  // namespace vgai::nn
