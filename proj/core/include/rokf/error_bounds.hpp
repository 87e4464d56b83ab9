#pragma once

#include <map>
#include <string>
#include <utility>

#include "rokf/lgss.hpp"
#include "rokf/matrix.hpp"
#include "rokf/projection.hpp"
#include "rokf/riccati.hpp"

namespace rokf {

/// Closed-loop map of a filter and its stability certificate.
struct StabilityReport {
  Mat closed_loop;   // A - K C A
  double rho = 0.0;  // spectral radius
  bool stable = false;  // rho < 1 - 1e-12
};

StabilityReport stability_report(const Mat& a, const Mat& gain, const Mat& c);

/// Every scalar constant entering the trace perturbation bounds, plus the
/// operator norms they are assembled from. The gain-perturbation bound is
///   ||DK||_HS <= (c_hat1 + c_hat2 tr M) tr M,
/// and the trace bound reads
///   tr DP <= (a tr M + b tr M^2) / (1 - (c1 tr M + c2 tr M^2 + c3 tr M^3
///            + c4 tr M^4)).
struct BoundConstants {
  double l0 = 0.0;  // series constant for the closed loop in use
  double c_hat1 = 0.0, c_hat2 = 0.0;
  double a = 0.0, b = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  double tr_m = 0.0;
  std::map<std::string, double> norms;
};

enum class BoundTheorem { a_priori, a_posteriori, remark43 };

struct BoundReport {
  BoundConstants constants;
  double tr_dp_bound = 0.0;     // trace-route value; +inf marker when the
  bool denominator_ok = false;  // denominator is not positive
  double nu = 0.0;            // ||I - Pi_s|| as a map from the X1 to the X norm
  double leading_term = 0.0;  // C * nu^2 (coefficient per the active theorem)
  double higher_term = 0.0;   // C_2 * nu^4 where the theorem provides one
  double total_bound = 0.0;   // leading_term + higher_term
  BoundTheorem theorem = BoundTheorem::a_priori;
  double closed_loop_radius = 0.0;
  bool stable = false;
};

/// Upper bound for the Lyapunov-inverse trace constant: partial sums of
/// ||Phi^(2j)|| plus a rigorous geometric tail (submultiplicativity ties the
/// tail to the best single-power norm seen), so the result always dominates
/// the true series.
double l0_constant(const Mat& phi, double tol = 1e-10, int max_terms = 200000);

/// Evaluates sum_j Phi^j X (Phi^*)^j, the inverse of the Lyapunov operator
/// X -> X - Phi X Phi^*.
Mat lyapunov_L_apply(const Mat& phi, const Mat& x, double tol = 1e-10);

/// Exact Kalman-gain perturbation between the nominal filter DARE and the
/// one with inflated noise W + A m A^*:
///   DK = (K^(b) C - I)(P~^(b) - P~^(F)) C^* (C P~^(F) C^* + R)^-1,
/// which reproduces K^(F) - K^(b) to machine precision. (The first-order
/// form that replaces P~^(b) by P~^(F) + A m A^* is accurate only to O(m^2)
/// and cannot meet the 1e-8 cross-check, so the exact identity is used.)
Mat delta_k_exact(const LgssModel& model, const Mat& m,
                  const DareSolution& dare_f, double tol = 1e-10);

/// (c_hat1 + c_hat2 * tr_m) * tr_m.
double delta_k_bound(double c_hat1, double c_hat2, double tr_m);

/// Trace perturbation bound; .second reports whether the denominator is
/// positive (value is +inf when it is not — a reported state, not an error).
std::pair<double, bool> tr_dp_bound(const BoundConstants& constants,
                                    double tr_m);

/// Assembles every constant from a converged nominal DARE. l0 is the series
/// constant for the closed loop the caller wants (nominal or reduced).
BoundConstants bound_constants(const LgssModel& model,
                               const DareSolution& dare_f, double l0,
                               double tr_m);

/// A-priori bound: requires only the model, the projection and the smooth
/// (X1) Gram. Leading term (1 + L0 ||A - K^F C A||^2) * sup_k E||x_k||_X1^2
/// * nu^2; the trace-route value (Eq-26 style) is reported alongside.
BoundReport a_priori_bound(const LgssModel& model,
                           const ProjectionPair& projection, const Mat& x1_gram,
                           double tol = 1e-10);

/// A-posteriori bound from converged reduced-filter quantities
/// (K_inf, Q_inf, M_inf): sharper series constant from the reduced closed
/// loop A - K_inf C A.
BoundReport a_posteriori_bound(const LgssModel& model,
                               const ProjectionPair& projection,
                               const Mat& k_inf, const Mat& q_inf,
                               const Mat& m_inf, const Mat& x1_gram,
                               double tol = 1e-10);

/// Fully computable relaxation that avoids every nominal-DARE quantity:
/// norms involving K^F, P~^F are replaced by reduced-side dominators
/// (||P~^(a)|| from the DARE with W + A M_inf A^*, minimum eigenvalue of R,
/// tr R^-1). Dominates the a-posteriori value by construction.
BoundReport remark43_bound(const LgssModel& model,
                           const ProjectionPair& projection, const Mat& k_inf,
                           const Mat& q_inf, const Mat& m_inf,
                           const Mat& x1_gram, double tol = 1e-10);

/// Exact covariance perturbation DP = P^(b) - P^(F) between the nominal DARE
/// and the one with W + A m A^*, with the terms of its two fixed-point
/// decompositions and their residuals:
///   DP = Phi_F DP Phi_F^* + E1 + E2 + h1 + h2     (nominal closed loop)
///   DP = Phi_b DP Phi_b^* + E1 + E2 + h2          (perturbed closed loop)
struct DeltaPDecomposition {
  Mat delta_p;
  Mat e1, e2, h1, h2;
  double residual_nominal = 0.0;   // first decomposition
  double residual_perturbed = 0.0; // second decomposition
  DareSolution dare_f, dare_b;
};

DeltaPDecomposition delta_p_exact(const LgssModel& model, const Mat& m,
                                  double tol = 1e-10);

/// sup_k E||x_k||^2 under the given Gram: stationary value, plus a transient
/// scan when s0 != 0 (the supremum need not be attained at stationarity).
double sup_state_energy(const LgssModel& model, const Mat& gram,
                        double tol = 1e-10, int max_iter = 60000);

} // namespace rokf
