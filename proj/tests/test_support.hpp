#pragma once

// Shared fixtures for the test binaries: seeded random models, projections,
// and PSD-ordering helpers. Expected values in the tests themselves are
// frozen from independent derivations (hand algebra, closed forms, or the
// brute-force Gaussian-conditioning oracle), never from the code under test.

#include <random>

#include <Eigen/Eigenvalues>

#include "rokf/coordinate_map.hpp"
#include "rokf/lgss.hpp"
#include "rokf/matrix.hpp"
#include "rokf/projection.hpp"
#include "rokf/psd.hpp"

namespace test_support {

using rokf::Mat;
using rokf::Vec;

inline Mat rand_mat(std::mt19937_64& rng, Eigen::Index rows,
                    Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * gauss(rng);
  }
  return m;
}

inline Vec rand_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * gauss(rng);
  return v;
}

// PSD with the requested rank (rank <= 0 means full rank).
inline Mat rand_psd(std::mt19937_64& rng, Eigen::Index n,
                    Eigen::Index rank = 0) {
  Eigen::Index r = rank <= 0 ? n : rank;
  Mat g = rand_mat(rng, n, r);
  return rokf::symmetrize(g * g.transpose());
}

// Random map rescaled to the requested spectral radius.
inline Mat rand_stable(std::mt19937_64& rng, Eigen::Index n,
                       double radius = 0.7) {
  Mat a = rand_mat(rng, n, n);
  double rho = rokf::spectral_radius(a);
  if (rho > 0.0) a *= radius / rho;
  return a;
}

struct ModelSpec {
  Eigen::Index n = 4;
  Eigen::Index n_out = 2;
  Eigen::Index n_in = 2;
  double radius = 0.7;     // spectral radius of A
  bool zero_mean = false;
  bool zero_s0 = false;
};

inline rokf::LgssModel rand_model(std::mt19937_64& rng, const ModelSpec& spec) {
  rokf::LgssModel m;
  m.a = rand_stable(rng, spec.n, spec.radius);
  m.b = rand_mat(rng, spec.n, spec.n_in);
  m.c = rand_mat(rng, spec.n_out, spec.n);
  m.u_cov = rand_psd(rng, spec.n_in);
  m.r_cov = rand_psd(rng, spec.n_out) +
            0.2 * Mat::Identity(spec.n_out, spec.n_out);
  m.mean0 = spec.zero_mean ? Vec::Zero(spec.n) : rand_vec(rng, spec.n);
  m.s0 = spec.zero_s0 ? Mat::Zero(spec.n, spec.n) : rand_psd(rng, spec.n);
  m.validate();
  return m;
}

// Orthogonal projection onto a random n_coarse-dimensional subspace.
inline rokf::ProjectionPair rand_projection(std::mt19937_64& rng,
                                            Eigen::Index n,
                                            Eigen::Index n_coarse) {
  rokf::CoordinateMap identity_map{Mat::Identity(n, n)};
  return rokf::orthogonal_projection(rand_mat(rng, n, n_coarse), identity_map);
}

template <typename A, typename B>
double max_abs_diff(const Eigen::MatrixBase<A>& a,
                    const Eigen::MatrixBase<B>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// PSD ordering x <= y with the spec's eigenvalue floor -1e-9 * (1 + scale).
inline bool psd_leq_floor(const Mat& x, const Mat& y, double floor = 1e-9) {
  Mat diff = rokf::symmetrize(y - x);
  Eigen::SelfAdjointEigenSolver<Mat> es(diff, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff();
  double scale = 1.0 + diff.cwiseAbs().maxCoeff();
  return lo >= -floor * scale;
}

inline bool is_psd_floor(const Mat& x, double floor = 1e-9) {
  return psd_leq_floor(Mat::Zero(x.rows(), x.cols()), x, floor);
}

} // namespace test_support
