#pragma once

#include <vector>

#include "rokf/filters.hpp"
#include "rokf/lgss.hpp"
#include "rokf/matrix.hpp"
#include "rokf/projection.hpp"

namespace rokf {

/// One prediction/update pair of a Riccati difference recursion.
struct RdeState {
  Mat p;       // filtered covariance
  Mat p_pred;  // predicted covariance
  int step = 0;
};

/// Fixed point of the filter Riccati map with its certificate.
struct DareSolution {
  Mat p;
  Mat p_pred;
  Mat gain;          // P~ C^* (C P~ C^* + R)^-1 at the fixed point
  double residual = 0.0;  // ||P - RiccatiStep(P)||_max
  int iterations = 0;
};

/// The discretization load term and its uniform dominator:
///   M_k = (I - Q_k Pi)(A V_{k-1} S~_{k-1}^+ V_{k-1}^* A^*
///         + P~_k C^* (C P~_k C^* + R)^-1 C P~_k)(I - Q_k Pi)^*
///   M   = (I - Pi_s) S (I - Pi_s)^*   with S the stationary state covariance.
struct DiscretizationBound {
  Mat m_bound;                   // M
  std::vector<double> m_k_trace;  // tr M_k, k = 1..horizon
};

/// S -> A S A^* + W, symmetrized.
Mat lyapunov_step(const Mat& s, const Mat& a, const Mat& w);

/// Fixed point of the Lyapunov recursion, S = A S A^* + W = sum_j A^j W A^*j,
/// by doubling. Requires spectral_radius(a) < 1; the returned S satisfies
/// ||S - A S A^* - W||_max <= tol.
Mat lyapunov_solve(const Mat& a, const Mat& w, double tol = 1e-12,
                   int max_iter = 200);

/// One Riccati step with process-noise covariance w:
///   P~ = A P A^* + W,  P = P~ - P~ C^* (C P~ C^* + R)^-1 C P~.
RdeState rde_step(const RdeState& state, const Mat& a, const Mat& w,
                  const Mat& c, const Mat& r);

/// Cross-validates the two derivations of the reduced error covariance: for
/// every step, recompute P_k as
///   P~_k - K_k C P~_k + M_k
/// (prediction/update with the discretization load term added) and compare to
/// the schedule's P_k = S_k - Q_k S~_k Q_k^*. Returns the max entrywise
/// deviation over all steps. The schedule must retain covariances.
double rde_err_consistency(const ReducedGainSchedule& schedule,
                           const LgssModel& model);

/// One step of the joint covariance of [x_k; x~_k]: S~bar = Abar S~bar Abar^*
/// + Bbar Ubar Bbar^* with the blocks assembled from the model and the
/// schedule's step-k operators. The (1,1) block tracks S_k, the (1,2) block
/// V_k and the (2,2) block S~_k of the schedule.
Mat augmented_lyapunov_step(const Mat& aug_cov, const LgssModel& model,
                            const ReducedGainSchedule& schedule, int k);

/// Assembles M and every M_k from a covariance-retaining schedule, asserting
/// the ordering M_k <= M (OrderingViolation beyond the PSD floor, which
/// signals an s_stationary that does not dominate the trajectory covariance).
DiscretizationBound m_bound(const ReducedGainSchedule& schedule,
                            const LgssModel& model, const Mat& s_stationary,
                            const ProjectionPair& projection);

/// Solves P = g(P), g the filter Riccati map with data (a, w, c, r), by
/// fixed-point iteration from p0. Convergence is declared after the step
/// change stays <= tol over a 10-step window and the residual ||P - g(P)||
/// is <= 10*tol.
DareSolution dare_solve(const Mat& a, const Mat& w, const Mat& c, const Mat& r,
                        const Mat& p0, double tol = 1e-10,
                        int max_iter = 60000);

/// Stationary (converged) operators of the reduced-filter recursion.
struct StationaryReduced {
  Mat gain;      // K_inf, n x m (full-space form; the coarse gain is Pi K_inf)
  Mat lift;      // Q_inf
  Mat est_cov;   // S~_inf
  Mat cross_cov; // V_inf
  Mat pred_cov;  // P~_inf
  Mat s_cov;     // S_inf (trajectory covariance at the stopping step)
  Mat err_cov;   // P_inf = S_inf - Q S~ Q^*
  int iterations = 0;
};

StationaryReduced reduced_stationary(const LgssModel& model,
                                     const ProjectionPair& projection,
                                     double tol = 1e-10, int max_iter = 60000);

struct DiscrepancyReport {
  double discrepancy = 0.0;  // lim_k E||Q_k x~_k - x^_k||^2 = lim tr P_k - tr P^F_k
  double direct_trace_difference = 0.0;  // tr P_inf - tr P^F_inf, cross-check
  double joint_radius = 0.0;  // spectral radius of the coupled propagation map
  int reduced_iterations = 0;
  int full_iterations = 0;
};

/// Stationary mean-square distance between the lifted reduced estimate and
/// the full-filter estimate, lim_k [tr P_k - tr P^F_k]. Evaluated through
/// the coupled recursion of (x, x^, e) with e = Q x~ - x^:
///   e_k = G e_{k-1} + D1 x^_{k-1} + D2 y_k,
///   G = Q Pi (A - K_inf C A),  D1 = G - (A - K^F C A),  D2 = Q Pi K_inf - K^F,
/// whose stationary covariance gives the limit directly. D1 and D2 are small
/// difference operators, so the result stays accurate far below the rounding
/// floor of subtracting two O(tr S) traces.
DiscrepancyReport stationary_discrepancy_report(const LgssModel& model,
                                                const ProjectionPair& projection,
                                                double tol = 1e-10,
                                                int max_iter = 60000);

/// Same, reusing an already-computed full-filter fixed point; the full DARE
/// does not depend on the projection, so mesh sweeps share one solve.
DiscrepancyReport stationary_discrepancy_report(const LgssModel& model,
                                                const ProjectionPair& projection,
                                                const DareSolution& full,
                                                double tol = 1e-10,
                                                int max_iter = 60000);

double stationary_discrepancy(const LgssModel& model,
                              const ProjectionPair& projection,
                              double tol = 1e-10, int max_iter = 60000);

/// The converged discretization load term
///   M_inf = (I - Q Pi)(A V S~^+ V^* A^* + K C P~)(I - Q Pi)^*
/// assembled from stationary reduced-filter operators. This is the
/// steady-state value of the per-step M_k, the quantity the a-posteriori
/// route perturbs the nominal Riccati fixed point with.
Mat stationary_load_term(const LgssModel& model,
                         const ProjectionPair& projection,
                         const StationaryReduced& stationary);

/// True stationary error covariance, in the full state space, of an
/// arbitrary time-invariant one-step filter
///   xh_k = a_s xh_{k-1} + gain (y_k - c_s a_s xh_{k-1})
/// whose estimate is lifted back by lift_map: the limit covariance of
/// x_k - lift_map xh_k. Makes no optimality assumption, so it measures
/// mismatched filters (naive coarse models, stationary approximations)
/// honestly. Throws Unstable if the joint propagation map has spectral
/// radius >= 1.
Mat filter_error_covariance(const LgssModel& model, const Mat& a_s,
                            const Mat& c_s, const Mat& gain,
                            const Mat& lift_map);

} // namespace rokf
