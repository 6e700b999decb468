#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace vgai {

// Row i holds the 2D vector of agent i.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

// Seeded random source. Uniform draws are built from raw 64-bit outputs so
// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
};

}  // namespace vgai
