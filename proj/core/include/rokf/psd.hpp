#pragma once

#include "rokf/matrix.hpp"

namespace rokf {

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix via truncated
/// eigendecomposition. Eigenvalues below rel_tol * max_eigenvalue are
/// treated as exact zeros.
Mat pseudoinverse(const Mat& a, double rel_tol = 1e-12);

/// Upper-triangular factor T (positive diagonal) of a symmetric positive
/// definite Gram matrix, satisfying gram = T^T T. Coordinates x -> T x are
/// orthonormal for the inner product <x, y> = x^T gram y.
/// Throws NotPositiveDefinite if the factorization fails.
Mat chol_upper(const Mat& gram);

/// Spectral radius (largest eigenvalue magnitude) of a general square
/// matrix, computed from the full eigendecomposition.
double spectral_radius(const Mat& a);

/// Operator 2-norm (largest singular value).
double op_norm(const Mat& a);

/// Norm of t as an operator between spaces whose inner products are given
/// by Gram matrices: sup_x ||t x||_ran / ||x||_dom.
double weighted_operator_norm(const Mat& t, const Mat& dom_gram,
                              const Mat& ran_gram);

/// Trace of a square matrix.
inline double trace(const Mat& a) { return a.trace(); }

/// Hilbert-Schmidt (Frobenius) norm.
inline double hs_norm(const Mat& a) { return a.norm(); }

/// Max-abs-entry norm, the convergence metric for fixed-point iterations.
inline double max_abs(const Mat& a) { return a.cwiseAbs().maxCoeff(); }

/// Smallest eigenvalue of a symmetric matrix (for PSD-ordering checks).
double min_eig_sym(const Mat& a);

/// True when min eig(a) >= -floor_scale * (1 + max eig(a)), the relative
/// tolerance under which a symmetric matrix counts as PSD here.
bool is_psd(const Mat& a, double floor_scale = 1e-10);

/// True when y - x is PSD with eigenvalue floor -floor_abs * (1 + ||y-x||),
/// i.e. x <= y in the semidefinite order up to numerical slack.
bool psd_leq(const Mat& x, const Mat& y, double floor_abs = 1e-9);

/// Symmetric PSD square root with negative eigenvalues clamped to zero.
/// Works for singular covariances (e.g. S0 = 0), unlike a Cholesky factor.
Mat psd_sqrt(const Mat& a);

} // namespace rokf
