#pragma once

#include <Eigen/Dense>

namespace rokf {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Symmetrize in place-free form; covariance recursions drift off symmetry in
/// the last bits and every consumer here assumes exact symmetry.
inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

} // namespace rokf
