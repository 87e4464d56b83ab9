#pragma once

#include <cstdint>
#include <random>

#include "rokf/matrix.hpp"

namespace rokf {

/// Seedable generator with fully pinned-down output: the mt19937_64 bit stream
/// is fixed by the standard, and uniforms/Gaussians are produced by explicit
/// arithmetic (no std::*_distribution, whose mappings vary across standard
/// libraries). Identical seeds therefore give bit-identical draws everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method (pairs are cached).
  double gauss();

  /// Vector of iid standard normals, filled in index order.
  Vec gauss_vec(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace rokf
