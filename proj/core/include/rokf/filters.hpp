#pragma once

#include <vector>

#include "rokf/lgss.hpp"
#include "rokf/matrix.hpp"
#include "rokf/projection.hpp"

namespace rokf {

/// What an offline pass keeps. Covariance sequences cost O(K n^2) memory;
/// long Monte Carlo horizons keep only the small per-step operators needed
/// to run the filter, plus traces and the final covariances.
struct RetentionPolicy {
  bool covariances = true;  // keep every per-step covariance matrix
  int lifts_from = 0;       // keep lift operators Q_k for k >= this index

  static RetentionPolicy everything() { return {}; }
  static RetentionPolicy stepping_only(int lifts_from) {
    return {false, lifts_from};
  }
};

/// Offline schedule of the full-state Kalman filter:
///   P~_k = A P_{k-1} A* + BUB*,  K_k = P~_k C^* (C P~_k C^* + R)^-1,
///   P_k = P~_k - K_k C P~_k,     P_0 = S0.
/// gains[k-1], pred_covs[k-1] hold step k >= 1; covs[k] holds P_k, k >= 0.
struct FullKfSchedule {
  std::vector<Mat> gains;
  std::vector<Mat> pred_covs;
  std::vector<Mat> covs;

  // Always retained regardless of policy.
  Mat a, c;                     // for online stepping
  Vec mean0;
  Mat final_cov, final_pred_cov;
  std::vector<double> tr_cov;   // tr P_k, k = 0..horizon
  std::vector<double> gain_norm;  // ||K_k||_HS, k = 1..horizon
  RetentionPolicy retention;

  int horizon() const { return static_cast<int>(gains.size()); }
  const Mat& gain(int k) const { return gains[k - 1]; }
  const Mat& pred_cov(int k) const;
  const Mat& cov(int k) const;
};

FullKfSchedule full_kf_offline(const LgssModel& model, int horizon,
                               const RetentionPolicy& retention = {});

/// One online step of the full filter (k >= 1):
///   x^_k = A x^_{k-1} + K_k (y_k - C A x^_{k-1}),   x^_0 = mean0.
Vec full_kf_step(const FullKfSchedule& schedule, int k,
                 const Vec& prev_estimate, const Vec& y_k);

/// Offline schedule of the optimal reduced-order filter. Step k >= 1:
///   S_k  = A S_{k-1} A* + BUB*
///   P~_k = A P_{k-1} A* + BUB*
///   K_k  = P~_k C^* (C P~_k C^* + R)^-1
///   V_k  = A Q_{k-1} S~_{k-1} Q_{k-1}^* A^* Pi^* + K_k (C P~_k C^* + R)(Pi K_k)^T
///   S~_k = Pi V_k
///   Q_k  = Pi^* + (I - Pi_s) V_k S~_k^+      (pseudoinverse completion,
///                                             defined even when S~_k = 0)
///   P_k  = S_k - Q_k S~_k Q_k^*
/// with S_0 = P_0 = S0, S~_0 = 0, Q_0 = Pi^*.
/// Sequences are k-indexed like FullKfSchedule. Nonzero initial means are
/// handled by filtering the centered system and shifting at the interface,
/// so the online estimates stay optimal for any mean0.
struct ReducedGainSchedule {
  ProjectionPair projection;

  std::vector<Mat> s;           // S_k, k = 0..K (policy-dependent)
  std::vector<Mat> pred_covs;   // P~_k, k = 1..K
  std::vector<Mat> gains;       // K_k, k = 1..K
  std::vector<Mat> cross_covs;  // V_k, k = 1..K
  std::vector<Mat> est_covs;    // S~_k, k = 0..K
  std::vector<Mat> lifts;       // Q_k, retained per policy
  std::vector<Mat> err_covs;    // P_k, k = 0..K

  // Small per-step operators for online stepping, always retained; index
  // [k-1] holds step k.
  std::vector<Mat> step_maps;   // Pi A Q_{k-1}      (nc x nc)
  std::vector<Mat> gain_maps;   // Pi K_k            (nc x m)
  std::vector<Mat> innov_maps;  // C A Q_{k-1}       (m x nc)

  // Prior mean sequences for centered filtering: state mean A^k mean0, its
  // coarse projection, and the output mean C A^k mean0.
  std::vector<Vec> state_mean;   // k = 0..K
  std::vector<Vec> coarse_mean;  // k = 0..K
  std::vector<Vec> output_mean;  // k = 1..K at [k-1]

  Mat a, c;
  Mat final_s, final_pred_cov, final_gain, final_cross_cov, final_est_cov,
      final_lift, final_err_cov;
  std::vector<double> tr_s, tr_err_cov;   // k = 0..K
  std::vector<double> gain_norm;          // k = 1..K at [k-1]
  RetentionPolicy retention;

  int horizon() const { return static_cast<int>(step_maps.size()); }
  const Mat& s_cov(int k) const;
  const Mat& pred_cov(int k) const;
  const Mat& gain(int k) const;
  const Mat& cross_cov(int k) const;
  const Mat& est_cov(int k) const;
  const Mat& lift_op(int k) const;
  const Mat& err_cov(int k) const;
};

ReducedGainSchedule reduced_offline(const LgssModel& model,
                                    const ProjectionPair& projection,
                                    int horizon,
                                    const RetentionPolicy& retention = {});

/// One online step of the reduced filter (k >= 1):
///   x~_k = Pi A Q_{k-1} x~_{k-1} + Pi K_k (y_k - C A Q_{k-1} x~_{k-1}),
/// applied to the centered signal when mean0 != 0; x~_0 = Pi mean0.
Vec reduced_step(const ReducedGainSchedule& schedule, int k,
                 const Vec& prev_estimate, const Vec& y_k);

/// Lift a coarse estimate to the fine space: E[x_k | x~_k] = Q_k x~_k
/// (centered and shifted when mean0 != 0). Pi * lift == x~_k.
Vec lift(const ReducedGainSchedule& schedule, int k, const Vec& coarse_estimate);

/// The engineer's coarse model that ignores discretization error:
/// (Pi A Pi^*, Pi B, C Pi^*, U, R, Pi mean0, Pi S0 Pi^*).
LgssModel naive_coarse_model(const LgssModel& model,
                             const ProjectionPair& projection);

/// Full Kalman filter run on naive_coarse_model; estimates live in coarse
/// coordinates and are lifted by Pi^* (not by any Q_k).
FullKfSchedule naive_coarse_offline(const LgssModel& model,
                                    const ProjectionPair& projection,
                                    int horizon,
                                    const RetentionPolicy& retention = {});

/// Stationary approximate reduced-order filter. From the stationary state
/// covariance S_inf:
///   Q^ = Pi^* + (I - Pi_s) S_inf Pi^* (Pi S_inf Pi^*)^+
///   V^ = (I-Pi_s) S_inf (I-Pi_s)^*
///        - (I-Pi_s) S_inf Pi^* (Pi S_inf Pi^*)^+ Pi S_inf (I-Pi_s)^*
/// and the coarse DARE with A_s = Pi A Q^, C_s = C Q^,
/// W_s = Pi B U B^* Pi^* + Pi A V^ A^* Pi^*.
struct ApproxStationaryFilter {
  Mat q_hat;    // n x nc lift
  Mat v_hat;    // n x n residual covariance, supported on range(I - Pi_s)
  Mat gain;     // nc x m stationary gain
  Mat p;        // nc x nc stationary error covariance of the coarse DARE
  Mat p_pred;
  Mat a_s, c_s, w_s;
  Mat s_inf;
  int dare_iterations = 0;
};

ApproxStationaryFilter approx_stationary_filter(const LgssModel& model,
                                                const ProjectionPair& projection,
                                                double tol = 1e-12,
                                                int max_iter = 40000);

/// One step of the stationary approximate filter on a centered signal:
///   x~_k = A_s x~_{k-1} + K (y_k - C_s A_s x~_{k-1}).
Vec approx_stationary_step(const ApproxStationaryFilter& filter,
                           const Vec& prev_estimate, const Vec& y_k);

} // namespace rokf
