#include "rokf/psd.hpp"

#include <Eigen/Eigenvalues>

#include "rokf/errors.hpp"

namespace rokf {

Mat pseudoinverse(const Mat& a, double rel_tol) {
  if (a.size() == 0) return a;  // empty block: pseudoinverse is empty too
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
  const Vec& d = es.eigenvalues();
  const Mat& v = es.eigenvectors();
  const double cut = rel_tol * std::max(d.cwiseAbs().maxCoeff(), 0.0);
  Vec dinv = Vec::Zero(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] > cut) dinv[i] = 1.0 / d[i];
  }
  return v * dinv.asDiagonal() * v.transpose();
}

Mat chol_upper(const Mat& gram) {
  Eigen::LLT<Mat> llt(symmetrize(gram));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("chol_upper: Gram matrix is not positive definite");
  }
  return Mat(llt.matrixL()).transpose();
}

double spectral_radius(const Mat& a) {
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

double op_norm(const Mat& a) {
  return a.jacobiSvd().singularValues()[0];
}

double weighted_operator_norm(const Mat& t, const Mat& dom_gram,
                              const Mat& ran_gram) {
  // ||t||_{dom->ran} = || T_ran t T_dom^{-1} ||_2 with Gram = T^T T on each side.
  const Mat t_dom = chol_upper(dom_gram);
  const Mat t_ran = chol_upper(ran_gram);
  const Mat rhs = t_dom.triangularView<Eigen::Upper>()
                      .solve(Mat::Identity(t.cols(), t.cols()));
  return op_norm(t_ran * t * rhs);
}

double min_eig_sym(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Mat& a, double floor_scale) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo >= -floor_scale * (1.0 + std::max(hi, 0.0));
}

bool psd_leq(const Mat& x, const Mat& y, double floor_abs) {
  const Mat d = symmetrize(y - x);
  return min_eig_sym(d) >= -floor_abs * (1.0 + max_abs(d));
}

Mat psd_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
  const Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace rokf
