#include "rokf/projection.hpp"

#include "rokf/errors.hpp"
#include "rokf/psd.hpp"

namespace rokf {

ProjectionPair ProjectionPair::identity(Eigen::Index n) {
  ProjectionPair p;
  p.pi = Mat::Identity(n, n);
  p.pi_s = Mat::Identity(n, n);
  return p;
}

ProjectionPair orthogonal_projection(const Mat& embedding,
                                     const CoordinateMap& fine_map) {
  // Coarse basis in fine orthonormal coordinates, then orthonormalize the
  // coarse side with its own Gram factor: pi = T_c^-T V^T, V = T_f E.
  const Mat v = fine_map.t() * embedding;
  const Mat gram_c = v.transpose() * v;
  Mat t_c;
  try {
    t_c = chol_upper(gram_c);
  } catch (const NotPositiveDefinite&) {
    throw RankDeficient(
        "orthogonal_projection: embedding columns are linearly dependent");
  }
  // Exactly dependent columns can slip past the factorization when rounding
  // turns a zero pivot into a tiny positive one; the pivot ratio bounds the
  // Gram condition number from below, so a collapsed pivot means the basis
  // is numerically rank deficient.
  const auto pivots = t_c.diagonal().cwiseAbs();
  if (pivots.minCoeff() <= 1e-7 * pivots.maxCoeff()) {
    throw RankDeficient(
        "orthogonal_projection: embedding columns are numerically dependent");
  }
  ProjectionPair p;
  p.pi = t_c.transpose().triangularView<Eigen::Lower>().solve(
      Mat(v.transpose()));
  p.pi_s = p.pi.transpose() * p.pi;
  return p;
}

} // namespace rokf
