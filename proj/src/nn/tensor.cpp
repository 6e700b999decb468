#include "vgai/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace vgai::nn {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_size(shape_)) {
    throw std::invalid_argument("Tensor: " + std::to_string(values_.size()) + " values for shape " + shape_string());
  }
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  if (shape_size(shape) != size()) throw std::invalid_argument("Tensor::reshaped: size mismatch");
  return Tensor(std::move(shape), values_);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.size() != size()) throw std::invalid_argument("Tensor +=: size mismatch");
  std::transform(values_.begin(), values_.end(), other.values_.begin(), values_.begin(), std::plus<>());
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

std::string Tensor::shape_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape_[i]);
  }
  return s + "}";
}

}  // namespace vgai::nn
