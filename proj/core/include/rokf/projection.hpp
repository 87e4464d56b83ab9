#pragma once

#include "rokf/coordinate_map.hpp"
#include "rokf/matrix.hpp"

namespace rokf {

/// Orthogonal projection onto a coarse subspace, held in the orthonormal
/// coordinates of the fine space. pi maps fine -> coarse coordinates with
/// pi pi^T = I, and pi_s = pi^T pi is the orthogonal projector on the fine
/// space (range = embedded coarse subspace).
struct ProjectionPair {
  Mat pi;    // n_coarse x n_fine
  Mat pi_s;  // n_fine x n_fine

  Eigen::Index n_coarse() const { return pi.rows(); }
  Eigen::Index n_fine() const { return pi.cols(); }
  Mat pi_adjoint() const { return pi.transpose(); }
  const Mat& pi_state() const { return pi_s; }

  static ProjectionPair identity(Eigen::Index n);
};

/// Build the X-orthogonal projection onto span(embedding columns), where the
/// embedding expresses coarse basis vectors in fine native coordinates and
/// fine_map carries the fine space's inner product. Columns must be linearly
/// independent.
ProjectionPair orthogonal_projection(const Mat& embedding,
                                     const CoordinateMap& fine_map);

} // namespace rokf
