#include "rokf/filters.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>
#include <string>

#include "rokf/errors.hpp"
#include "rokf/psd.hpp"

namespace rokf {

namespace {

const Mat& retained(const std::vector<Mat>& seq, int index, const char* what) {
  if (index < 0 || index >= static_cast<int>(seq.size())) {
    throw std::logic_error(std::string(what) +
                           ": sequence not retained at this index "
                           "(see RetentionPolicy)");
  }
  return seq[static_cast<size_t>(index)];
}

void check_psd_or_throw(const Mat& m, const char* what, int k) {
  if (!is_psd(m)) {
    throw NotPositiveDefinite(std::string(what) + " lost positive "
                              "semidefiniteness at step " + std::to_string(k));
  }
}

// Innovation solve K = pred C^T (C pred C^T + R)^{-1} via Cholesky of the
// innovation covariance; R is validated strictly positive definite.
Mat innovation_gain(const Mat& pred, const Mat& c, const Mat& r, Mat* sy_out) {
  Mat sy = symmetrize(c * pred * c.transpose() + r);
  Eigen::LLT<Mat> llt(sy);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("innovation covariance is not positive definite");
  }
  if (sy_out) *sy_out = sy;
  return llt.solve(c * pred).transpose();
}

} // namespace

const Mat& FullKfSchedule::pred_cov(int k) const {
  return retained(pred_covs, k - 1, "FullKfSchedule::pred_cov");
}

const Mat& FullKfSchedule::cov(int k) const {
  return retained(covs, k, "FullKfSchedule::cov");
}

FullKfSchedule full_kf_offline(const LgssModel& model, int horizon,
                               const RetentionPolicy& retention) {
  model.validate();
  if (horizon < 0) throw std::invalid_argument("full_kf_offline: horizon < 0");

  FullKfSchedule out;
  out.retention = retention;
  out.a = model.a;
  out.c = model.c;
  out.mean0 = model.mean0;

  const Mat w = symmetrize(model.b * model.u_cov * model.b.transpose());

  Mat p = symmetrize(model.s0);
  Mat pred = p;
  out.tr_cov.reserve(static_cast<size_t>(horizon) + 1);
  out.gain_norm.reserve(static_cast<size_t>(horizon));
  out.tr_cov.push_back(trace(p));
  if (retention.covariances) out.covs.push_back(p);

  out.gains.reserve(static_cast<size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    pred = symmetrize(model.a * p * model.a.transpose() + w);
    Mat gain = innovation_gain(pred, model.c, model.r_cov, nullptr);
    p = symmetrize(pred - gain * model.c * pred);

    if (retention.covariances || k % 128 == 0 || k == horizon) {
      check_psd_or_throw(p, "full filter error covariance", k);
    }
    out.gains.push_back(gain);
    out.gain_norm.push_back(hs_norm(gain));
    out.tr_cov.push_back(trace(p));
    if (retention.covariances) {
      out.pred_covs.push_back(pred);
      out.covs.push_back(p);
    }
  }
  out.final_cov = p;
  out.final_pred_cov = pred;
  return out;
}

Vec full_kf_step(const FullKfSchedule& schedule, int k,
                 const Vec& prev_estimate, const Vec& y_k) {
  if (k < 1 || k > schedule.horizon()) {
    throw std::out_of_range("full_kf_step: step index outside schedule");
  }
  Vec predicted = schedule.a * prev_estimate;
  return predicted + schedule.gain(k) * (y_k - schedule.c * predicted);
}

const Mat& ReducedGainSchedule::s_cov(int k) const {
  return retained(s, k, "ReducedGainSchedule::s_cov");
}
const Mat& ReducedGainSchedule::pred_cov(int k) const {
  return retained(pred_covs, k - 1, "ReducedGainSchedule::pred_cov");
}
const Mat& ReducedGainSchedule::gain(int k) const {
  return retained(gains, k - 1, "ReducedGainSchedule::gain");
}
const Mat& ReducedGainSchedule::cross_cov(int k) const {
  return retained(cross_covs, k - 1, "ReducedGainSchedule::cross_cov");
}
const Mat& ReducedGainSchedule::est_cov(int k) const {
  return retained(est_covs, k, "ReducedGainSchedule::est_cov");
}
const Mat& ReducedGainSchedule::lift_op(int k) const {
  if (retention.covariances || retention.lifts_from <= 0) {
    return retained(lifts, k, "ReducedGainSchedule::lift_op");
  }
  return retained(lifts, k - retention.lifts_from,
                  "ReducedGainSchedule::lift_op");
}
const Mat& ReducedGainSchedule::err_cov(int k) const {
  return retained(err_covs, k, "ReducedGainSchedule::err_cov");
}

ReducedGainSchedule reduced_offline(const LgssModel& model,
                                    const ProjectionPair& projection,
                                    int horizon,
                                    const RetentionPolicy& retention) {
  model.validate();
  if (horizon < 0) throw std::invalid_argument("reduced_offline: horizon < 0");
  const Eigen::Index n = model.dim();
  if (projection.pi.cols() != n) {
    throw std::invalid_argument(
        "reduced_offline: projection dimension does not match model state");
  }

  ReducedGainSchedule out;
  out.retention = retention;
  out.projection = projection;
  out.a = model.a;
  out.c = model.c;

  const Mat& pi = projection.pi;
  const Mat pi_adj = projection.pi_adjoint();
  const Mat complement = Mat::Identity(n, n) - projection.pi_state();
  const Mat w = symmetrize(model.b * model.u_cov * model.b.transpose());
  const Eigen::Index nc = pi.rows();

  const bool keep_lift_seq = retention.covariances || retention.lifts_from <= 0;

  Mat s_cur = symmetrize(model.s0);
  Mat p_cur = s_cur;
  Mat st_cur = Mat::Zero(nc, nc);
  Mat q_cur = pi_adj;
  Vec mu = model.mean0;

  auto record_initial = [&]() {
    out.tr_s.push_back(trace(s_cur));
    out.tr_err_cov.push_back(trace(p_cur));
    out.state_mean.push_back(mu);
    out.coarse_mean.push_back(pi * mu);
    if (retention.covariances) {
      out.s.push_back(s_cur);
      out.est_covs.push_back(st_cur);
      out.err_covs.push_back(p_cur);
    }
    if (keep_lift_seq) out.lifts.push_back(q_cur);
  };
  record_initial();

  for (int k = 1; k <= horizon; ++k) {
    // Online operators use the lift from the previous step.
    Mat step_map = pi * model.a * q_cur;
    Mat innov_map = model.c * model.a * q_cur;

    Mat s_next = symmetrize(model.a * s_cur * model.a.transpose() + w);
    Mat pred = symmetrize(model.a * p_cur * model.a.transpose() + w);
    Mat sy;
    Mat gain = innovation_gain(pred, model.c, model.r_cov, &sy);

    Mat v = model.a * q_cur * st_cur * q_cur.transpose() *
                model.a.transpose() * pi_adj +
            gain * sy * (pi * gain).transpose();
    Mat st_next = symmetrize(pi * v);
    Mat q_next = pi_adj + complement * v * pseudoinverse(st_next);
    Mat p_next = symmetrize(s_next - q_next * st_next * q_next.transpose());

    if (retention.covariances || k % 128 == 0 || k == horizon) {
      check_psd_or_throw(p_next, "reduced filter error covariance", k);
      check_psd_or_throw(st_next, "reduced estimate covariance", k);
    }

    mu = model.a * mu;

    out.step_maps.push_back(step_map);
    out.innov_maps.push_back(innov_map);
    out.gain_maps.push_back(pi * gain);
    out.gain_norm.push_back(hs_norm(gain));
    out.tr_s.push_back(trace(s_next));
    out.tr_err_cov.push_back(trace(p_next));
    out.state_mean.push_back(mu);
    out.coarse_mean.push_back(pi * mu);
    out.output_mean.push_back(model.c * mu);

    if (retention.covariances) {
      out.s.push_back(s_next);
      out.pred_covs.push_back(pred);
      out.gains.push_back(gain);
      out.cross_covs.push_back(v);
      out.est_covs.push_back(st_next);
      out.err_covs.push_back(p_next);
      out.lifts.push_back(q_next);
    } else if (keep_lift_seq || k >= retention.lifts_from) {
      out.lifts.push_back(q_next);
    }
    if (k == horizon) {
      out.final_pred_cov = pred;
      out.final_gain = gain;
      out.final_cross_cov = v;
    }

    s_cur = std::move(s_next);
    p_cur = std::move(p_next);
    st_cur = std::move(st_next);
    q_cur = std::move(q_next);
  }

  out.final_s = s_cur;
  out.final_est_cov = st_cur;
  out.final_lift = q_cur;
  out.final_err_cov = p_cur;
  return out;
}

Vec reduced_step(const ReducedGainSchedule& schedule, int k,
                 const Vec& prev_estimate, const Vec& y_k) {
  if (k < 1 || k > schedule.horizon()) {
    throw std::out_of_range("reduced_step: step index outside schedule");
  }
  const size_t i = static_cast<size_t>(k - 1);
  // Filter the centered signal, then restore the coarse prior mean. For
  // mean0 == 0 the shifts vanish and this is the textbook recursion.
  Vec centered_prev = prev_estimate - schedule.coarse_mean[i];
  Vec centered_y = y_k - schedule.output_mean[i];
  Vec predicted = schedule.step_maps[i] * centered_prev;
  Vec innovation = centered_y - schedule.innov_maps[i] * centered_prev;
  return predicted + schedule.gain_maps[i] * innovation +
         schedule.coarse_mean[static_cast<size_t>(k)];
}

Vec lift(const ReducedGainSchedule& schedule, int k, const Vec& coarse_estimate) {
  const Vec& mu = schedule.state_mean[static_cast<size_t>(k)];
  const Vec& mu_c = schedule.coarse_mean[static_cast<size_t>(k)];
  return schedule.lift_op(k) * (coarse_estimate - mu_c) + mu;
}

LgssModel naive_coarse_model(const LgssModel& model,
                             const ProjectionPair& projection) {
  const Mat& pi = projection.pi;
  const Mat pi_adj = projection.pi_adjoint();
  LgssModel coarse;
  coarse.a = pi * model.a * pi_adj;
  coarse.b = pi * model.b;
  coarse.c = model.c * pi_adj;
  coarse.u_cov = model.u_cov;
  coarse.r_cov = model.r_cov;
  coarse.mean0 = pi * model.mean0;
  coarse.s0 = symmetrize(pi * model.s0 * pi.transpose());
  return coarse;
}

FullKfSchedule naive_coarse_offline(const LgssModel& model,
                                    const ProjectionPair& projection,
                                    int horizon,
                                    const RetentionPolicy& retention) {
  return full_kf_offline(naive_coarse_model(model, projection), horizon,
                         retention);
}

ApproxStationaryFilter approx_stationary_filter(const LgssModel& model,
                                                const ProjectionPair& projection,
                                                double tol, int max_iter) {
  model.validate();
  const Eigen::Index n = model.dim();
  const Mat& pi = projection.pi;
  const Mat pi_adj = projection.pi_adjoint();
  const Mat complement = Mat::Identity(n, n) - projection.pi_state();
  const Mat w = symmetrize(model.b * model.u_cov * model.b.transpose());

  // Stationary state covariance by doubling: S <- A S A^* + W converges
  // geometrically when rho(A) < 1.
  if (spectral_radius(model.a) >= 1.0) {
    throw Unstable("approx_stationary_filter: state map has spectral radius >= 1");
  }
  Mat s_inf = w;
  Mat a_pow = model.a;
  int iters = 0;
  for (;; ++iters) {
    if (iters >= max_iter) {
      throw NoConvergence("approx_stationary_filter: Lyapunov iteration "
                          "exceeded max_iter");
    }
    Mat s_next = symmetrize(s_inf + a_pow * s_inf * a_pow.transpose());
    Mat a_next = a_pow * a_pow;
    double change = max_abs(s_next - s_inf);
    s_inf = std::move(s_next);
    a_pow = std::move(a_next);
    if (change < tol * (1.0 + max_abs(s_inf))) break;
  }

  ApproxStationaryFilter out;
  out.s_inf = s_inf;
  Mat proj_cov = symmetrize(pi * s_inf * pi.transpose());
  Mat proj_cov_pinv = pseudoinverse(proj_cov);
  Mat cross = complement * s_inf * pi.transpose();  // (I-Pi_s) S Pi^*
  out.q_hat = pi_adj + cross * proj_cov_pinv;
  out.v_hat = symmetrize(complement * s_inf * complement.transpose() -
                         cross * proj_cov_pinv * cross.transpose());

  out.a_s = pi * model.a * out.q_hat;
  out.c_s = model.c * out.q_hat;
  out.w_s = symmetrize(pi * w * pi.transpose() +
                       pi * model.a * out.v_hat * model.a.transpose() *
                           pi.transpose());

  // Coarse DARE by fixed-point iteration of the filter Riccati map.
  Mat p = symmetrize(pi * model.s0 * pi.transpose());
  Mat pred = p;
  int k = 0;
  for (;; ++k) {
    if (k >= max_iter) {
      throw NoConvergence("approx_stationary_filter: DARE iteration "
                          "exceeded max_iter");
    }
    pred = symmetrize(out.a_s * p * out.a_s.transpose() + out.w_s);
    Mat sy = symmetrize(out.c_s * pred * out.c_s.transpose() + model.r_cov);
    Eigen::LLT<Mat> llt(sy);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite(
          "approx_stationary_filter: innovation covariance not positive "
          "definite");
    }
    Mat gain = llt.solve(out.c_s * pred).transpose();
    Mat p_next = symmetrize(pred - gain * out.c_s * pred);
    double change = max_abs(p_next - p);
    p = std::move(p_next);
    out.gain = std::move(gain);
    if (change < tol * (1.0 + max_abs(p))) break;
  }
  out.p = p;
  out.p_pred = pred;
  out.dare_iterations = k + 1;
  return out;
}

Vec approx_stationary_step(const ApproxStationaryFilter& filter,
                           const Vec& prev_estimate, const Vec& y_k) {
  Vec predicted = filter.a_s * prev_estimate;
  return predicted + filter.gain * (y_k - filter.c_s * predicted);
}

} // namespace rokf
