#pragma once

#include <cstdint>
#include <vector>

#include "rokf/matrix.hpp"

namespace rokf {

/// Discrete-time linear-Gaussian state-space model
///   x_k = A x_{k-1} + B u_k,   u_k ~ N(0, U)
///   y_k = C x_k + w_k,         w_k ~ N(0, R)
///   x_0 ~ N(mean0, S0)
/// with u, w, x_0 mutually independent. R must be strictly positive
/// definite; the other covariances may be singular.
struct LgssModel {
  Mat a;      // n x n state transition
  Mat b;      // n x q input map
  Mat c;      // m x n output map
  Mat u_cov;  // q x q input noise covariance
  Mat r_cov;  // m x m output noise covariance (strictly PD)
  Vec mean0;  // n     initial mean
  Mat s0;     // n x n initial covariance

  Eigen::Index dim() const { return a.rows(); }
  Eigen::Index n_in() const { return b.cols(); }
  Eigen::Index n_out() const { return c.rows(); }

  /// Throws std::invalid_argument on inconsistent shapes, asymmetric
  /// covariance blocks, or R not strictly positive definite.
  void validate() const;
};

/// One simulated trajectory. states has K+1 columns (column k = x_k,
/// column 0 = x_0); outputs has K columns (column k-1 = y_k).
struct Trajectory {
  Mat states;
  Mat outputs;
  std::uint64_t seed = 0;

  Eigen::Index horizon() const { return outputs.cols(); }
};

/// Simulate one trajectory over k = 1..horizon. The draw order is pinned:
/// x0 noise (n standard normals), then per step q input normals followed by
/// m measurement normals; covariances enter through their symmetric PSD
/// square roots. Identical (model, horizon, seed) give bit-identical output.
Trajectory simulate(const LgssModel& model, int horizon, std::uint64_t seed);

/// A Gaussian vector in explicit (mean, covariance) form, partitioned into
/// consecutive named blocks.
struct JointGaussian {
  Vec mean;
  Mat cov;
  std::vector<Eigen::Index> block_sizes;

  Eigen::Index blocks() const {
    return static_cast<Eigen::Index>(block_sizes.size());
  }
  Eigen::Index block_offset(Eigen::Index i) const;
  Eigen::Index block_size(Eigen::Index i) const { return block_sizes[i]; }
};

/// Exact joint distribution of [x_K, y_1, ..., y_K] under the model,
/// assembled by propagating covariances. Quadratic in (n + K m); intended
/// for small test instances, not production filtering.
JointGaussian build_joint(const LgssModel& model, int horizon);

/// Result of Gaussian conditioning: the conditional mean and covariance of
/// the target block.
struct Conditioned {
  Vec mean;
  Mat cov;
};

/// Condition the target block on the listed given blocks taking the stacked
/// observed values (concatenated in given_blocks order). Uses a
/// pseudoinverse, so degenerate observed blocks are allowed.
Conditioned condition(const JointGaussian& joint, Eigen::Index target_block,
                      const std::vector<Eigen::Index>& given_blocks,
                      const Vec& observed_values);

/// Two-stage conditional mean for a three-block joint [h1, h2, h3]:
/// E[h1|h2,h3] = E[h1|h2] + Cov(h1-E[h1|h2], h3-E[h3|h2]) *
///               Cov(h3-E[h3|h2])^+ (h3 - E[h3|h2]).
/// Must equal condition() on the merged block [h2, h3]. With strict=true
/// throws SingularInnovation when the h3-innovation covariance is singular
/// beyond the pseudoinverse tolerance; by default the pseudoinverse is used.
Vec condition_two_stage(const JointGaussian& joint, const Vec& h2_value,
                        const Vec& h3_value, bool strict = false);

} // namespace rokf
