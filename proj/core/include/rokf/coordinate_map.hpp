#pragma once

#include "rokf/matrix.hpp"

namespace rokf {

/// Change of basis between "native" coordinates (e.g. FEM coefficients) with a
/// non-trivial inner product Gram matrix G, and orthonormal coordinates where
/// that inner product is the Euclidean one. With G = T^T T (T upper
/// triangular) a vector maps as x_on = T x and an operator as A_on = T A T^-1.
class CoordinateMap {
 public:
  explicit CoordinateMap(const Mat& gram);

  const Mat& t() const { return t_; }
  const Mat& t_inv() const { return t_inv_; }
  Mat gram() const { return t_.transpose() * t_; }
  Eigen::Index dim() const { return t_.rows(); }

  Vec to_orthonormal(const Vec& x) const { return t_ * x; }
  Vec from_orthonormal(const Vec& x) const { return t_inv_ * x; }
  Mat map_operator(const Mat& a) const { return t_ * a * t_inv_; }
  /// Input operators (noise shapes): only the range lives in the state space.
  Mat map_input(const Mat& b) const { return t_ * b; }
  /// Output operators (functionals): only the domain lives in the state space.
  Mat map_output(const Mat& c) const { return c * t_inv_; }
  /// Covariances transform congruently: S_on = T S T^T.
  Mat map_covariance(const Mat& s) const { return t_ * s * t_.transpose(); }

 private:
  Mat t_;
  Mat t_inv_;
};

/// Factor a symmetric positive definite Gram matrix into a coordinate map.
/// Throws NotPositiveDefinite when the Gram matrix is not (numerically) PD.
inline CoordinateMap gram_orthonormalize(const Mat& gram) {
  return CoordinateMap(gram);
}

} // namespace rokf
