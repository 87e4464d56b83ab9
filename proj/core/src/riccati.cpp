#include "rokf/riccati.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>
#include <string>

#include "rokf/errors.hpp"
#include "rokf/psd.hpp"

namespace rokf {

namespace {

Mat riccati_update(const Mat& pred, const Mat& c, const Mat& r, Mat* gain_out) {
  Mat sy = symmetrize(c * pred * c.transpose() + r);
  Eigen::LLT<Mat> llt(sy);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("innovation covariance is not positive definite");
  }
  Mat gain = llt.solve(c * pred).transpose();
  if (gain_out) *gain_out = gain;
  return symmetrize(pred - gain * c * pred);
}

// Stationary covariance of z_k = a z_{k-1} + noise, noise covariance w, by
// doubling with a stall stop: the update shrinks double-exponentially, so
// stopping when it reaches the rounding floor gives the fixed point to
// machine precision. (An absolute-residual certificate would be defeated by
// the O(n eps ||S||) floor at benchmark scale, so it is not used here.)
Mat doubling_to_stationarity(const Mat& a, const Mat& w) {
  Mat s = symmetrize(w);
  Mat a_pow = a;
  for (int it = 0; it < 80; ++it) {
    Mat next = symmetrize(s + a_pow * s * a_pow.transpose());
    a_pow = a_pow * a_pow;
    double change = max_abs(next - s);
    s = std::move(next);
    if (change <= 1e-15 * (1.0 + max_abs(s))) break;
  }
  return s;
}

// M_k of step k (k >= 1) from a covariance-retaining schedule. The first
// piece uses the previous step's cross covariance; at k = 1 the reduced
// estimate covariance S~_0 is zero, so that piece vanishes.
Mat load_term(const ReducedGainSchedule& schedule, const LgssModel& model,
              const Mat& complement_q, int k) {
  const Mat& pred = schedule.pred_cov(k);
  Mat core = symmetrize(schedule.gain(k) * model.c * pred);
  if (k >= 2) {
    const Mat& v_prev = schedule.cross_cov(k - 1);
    Mat vsv = model.a * v_prev * pseudoinverse(schedule.est_cov(k - 1)) *
              v_prev.transpose() * model.a.transpose();
    core += symmetrize(vsv);
  }
  return symmetrize(complement_q * core * complement_q.transpose());
}

} // namespace

Mat lyapunov_step(const Mat& s, const Mat& a, const Mat& w) {
  return symmetrize(a * s * a.transpose() + w);
}

Mat lyapunov_solve(const Mat& a, const Mat& w, double tol, int max_iter) {
  if (spectral_radius(a) >= 1.0) {
    throw Unstable("lyapunov_solve: spectral radius >= 1");
  }
  // Doubling: after m rounds s holds sum_{j < 2^m} A^j W A^*j.
  Mat s = symmetrize(w);
  Mat a_pow = a;
  for (int it = 0; it < max_iter; ++it) {
    Mat s_next = symmetrize(s + a_pow * s * a_pow.transpose());
    a_pow = a_pow * a_pow;
    double change = max_abs(s_next - s);
    s = std::move(s_next);
    if (change < tol) {
      double residual = max_abs(s - a * s * a.transpose() - w);
      if (residual <= tol) return s;
    }
  }
  throw NoConvergence("lyapunov_solve: max_iter exceeded");
}

RdeState rde_step(const RdeState& state, const Mat& a, const Mat& w,
                  const Mat& c, const Mat& r) {
  RdeState next;
  next.p_pred = symmetrize(a * state.p * a.transpose() + w);
  next.p = riccati_update(next.p_pred, c, r, nullptr);
  next.step = state.step + 1;
  return next;
}

double rde_err_consistency(const ReducedGainSchedule& schedule,
                           const LgssModel& model) {
  if (!schedule.retention.covariances) {
    throw std::logic_error(
        "rde_err_consistency: schedule must retain covariances");
  }
  const Eigen::Index n = model.dim();
  double max_dev = 0.0;
  for (int k = 1; k <= schedule.horizon(); ++k) {
    Mat complement_q =
        Mat::Identity(n, n) - schedule.lift_op(k) * schedule.projection.pi;
    const Mat& pred = schedule.pred_cov(k);
    Mat p_alt = symmetrize(pred - schedule.gain(k) * model.c * pred) +
                load_term(schedule, model, complement_q, k);
    double dev = max_abs(p_alt - schedule.err_cov(k));
    if (dev > max_dev) max_dev = dev;
  }
  return max_dev;
}

Mat augmented_lyapunov_step(const Mat& aug_cov, const LgssModel& model,
                            const ReducedGainSchedule& schedule, int k) {
  if (k < 1 || k > schedule.horizon()) {
    throw std::out_of_range("augmented_lyapunov_step: step index outside schedule");
  }
  const Eigen::Index n = model.dim();
  const Eigen::Index nc = schedule.projection.pi.rows();
  const Eigen::Index nu = model.n_in();
  const Eigen::Index m = model.n_out();
  if (aug_cov.rows() != n + nc || aug_cov.cols() != n + nc) {
    throw std::invalid_argument("augmented_lyapunov_step: aug_cov has wrong size");
  }
  const size_t i = static_cast<size_t>(k - 1);
  const Mat& step_map = schedule.step_maps[i];   // Pi A Q_{k-1}
  const Mat& gain_map = schedule.gain_maps[i];   // Pi K_k
  const Mat& innov_map = schedule.innov_maps[i]; // C A Q_{k-1}

  // x_k  = A x + B u
  // x~_k = (Pi K_k C A) x + (Pi A Q - Pi K_k C A Q) x~ + Pi K_k (C B u + w)
  Mat a_bar = Mat::Zero(n + nc, n + nc);
  a_bar.topLeftCorner(n, n) = model.a;
  a_bar.bottomLeftCorner(nc, n) = gain_map * model.c * model.a;
  a_bar.bottomRightCorner(nc, nc) = step_map - gain_map * innov_map;

  Mat b_bar = Mat::Zero(n + nc, nu + m);
  b_bar.topLeftCorner(n, nu) = model.b;
  b_bar.bottomLeftCorner(nc, nu) = gain_map * model.c * model.b;
  b_bar.bottomRightCorner(nc, m) = gain_map;

  Mat u_bar = Mat::Zero(nu + m, nu + m);
  u_bar.topLeftCorner(nu, nu) = model.u_cov;
  u_bar.bottomRightCorner(m, m) = model.r_cov;

  return symmetrize(a_bar * aug_cov * a_bar.transpose() +
                    b_bar * u_bar * b_bar.transpose());
}

DiscretizationBound m_bound(const ReducedGainSchedule& schedule,
                            const LgssModel& model, const Mat& s_stationary,
                            const ProjectionPair& projection) {
  if (!schedule.retention.covariances) {
    throw std::logic_error("m_bound: schedule must retain covariances");
  }
  const Eigen::Index n = model.dim();
  const Mat complement = Mat::Identity(n, n) - projection.pi_state();
  DiscretizationBound out;
  out.m_bound = symmetrize(complement * s_stationary * complement.transpose());
  out.m_k_trace.reserve(static_cast<size_t>(schedule.horizon()));
  for (int k = 1; k <= schedule.horizon(); ++k) {
    Mat complement_q =
        Mat::Identity(n, n) - schedule.lift_op(k) * schedule.projection.pi;
    Mat m_k = load_term(schedule, model, complement_q, k);
    out.m_k_trace.push_back(trace(m_k));
    if (!psd_leq(m_k, out.m_bound)) {
      throw OrderingViolation(
          "m_bound: M_" + std::to_string(k) +
          " is not dominated by M; the supplied stationary covariance does "
          "not dominate the trajectory covariance");
    }
  }
  return out;
}

DareSolution dare_solve(const Mat& a, const Mat& w, const Mat& c, const Mat& r,
                        const Mat& p0, double tol, int max_iter) {
  if (min_eig_sym(symmetrize(r)) <= 0.0) {
    throw NotPositiveDefinite("dare_solve: r must be strictly positive definite");
  }
  Mat p = symmetrize(p0);
  int window = 0;
  for (int k = 1; k <= max_iter; ++k) {
    Mat pred = symmetrize(a * p * a.transpose() + w);
    Mat p_next = riccati_update(pred, c, r, nullptr);
    window = (max_abs(p_next - p) <= tol) ? window + 1 : 0;
    p = std::move(p_next);
    if (window >= 10) {
      // Certify: one more Riccati step from the candidate must return it.
      DareSolution out;
      out.p = p;
      out.p_pred = symmetrize(a * p * a.transpose() + w);
      Mat p_check = riccati_update(out.p_pred, c, r, &out.gain);
      out.residual = max_abs(p - p_check);
      out.iterations = k;
      if (out.residual <= 10.0 * tol) return out;
      window = 0;
    }
  }
  throw NoConvergence("dare_solve: max_iter exceeded");
}

StationaryReduced reduced_stationary(const LgssModel& model,
                                     const ProjectionPair& projection,
                                     double tol, int max_iter) {
  model.validate();
  const Eigen::Index n = model.dim();
  const Eigen::Index nc = projection.pi.rows();
  const Mat& pi = projection.pi;
  const Mat pi_adj = projection.pi_adjoint();
  const Mat complement = Mat::Identity(n, n) - projection.pi_state();
  const Mat w = symmetrize(model.b * model.u_cov * model.b.transpose());

  Mat s = symmetrize(model.s0);
  Mat p = s;
  Mat st = Mat::Zero(nc, nc);
  Mat q = pi_adj;
  Mat gain_prev, lift_prev;
  Mat gain, v, pred;
  int hits = 0;
  for (int k = 1; k <= max_iter; ++k) {
    s = symmetrize(model.a * s * model.a.transpose() + w);
    pred = symmetrize(model.a * p * model.a.transpose() + w);
    Mat sy = symmetrize(model.c * pred * model.c.transpose() + model.r_cov);
    Eigen::LLT<Mat> llt(sy);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite(
          "reduced_stationary: innovation covariance not positive definite");
    }
    gain = llt.solve(model.c * pred).transpose();
    v = model.a * q * st * q.transpose() * model.a.transpose() * pi_adj +
        gain * sy * (pi * gain).transpose();
    st = symmetrize(pi * v);
    q = pi_adj + complement * v * pseudoinverse(st);
    p = symmetrize(s - q * st * q.transpose());

    if (gain_prev.size() > 0) {
      double dg = max_abs(gain - gain_prev) / (1.0 + max_abs(gain));
      double dq = max_abs(q - lift_prev) / (1.0 + max_abs(q));
      if (dg < tol && dq < tol) {
        if (++hits >= 25) {
          StationaryReduced out;
          out.gain = gain;
          out.lift = q;
          out.est_cov = st;
          out.cross_cov = v;
          out.pred_cov = pred;
          out.s_cov = s;
          out.err_cov = p;
          out.iterations = k;
          return out;
        }
      } else {
        hits = 0;
      }
    }
    gain_prev = gain;
    lift_prev = q;
  }
  throw NoConvergence("reduced_stationary: max_iter exceeded");
}

DiscrepancyReport stationary_discrepancy_report(const LgssModel& model,
                                                const ProjectionPair& projection,
                                                double tol, int max_iter) {
  const Mat w = symmetrize(model.b * model.u_cov * model.b.transpose());
  DareSolution full =
      dare_solve(model.a, w, model.c, model.r_cov,
                 Mat::Zero(model.dim(), model.dim()), tol, max_iter);
  return stationary_discrepancy_report(model, projection, full, tol, max_iter);
}

DiscrepancyReport stationary_discrepancy_report(const LgssModel& model,
                                                const ProjectionPair& projection,
                                                const DareSolution& full,
                                                double tol, int max_iter) {
  const Eigen::Index n = model.dim();
  const Eigen::Index nu = model.n_in();
  const Eigen::Index m = model.n_out();

  StationaryReduced red = reduced_stationary(model, projection, tol, max_iter);

  Mat phi_full = model.a - full.gain * model.c * model.a;
  Mat q_pi = red.lift * projection.pi;
  Mat g = q_pi * (model.a - red.gain * model.c * model.a);
  Mat d1 = g - phi_full;
  Mat d2 = q_pi * red.gain - full.gain;
  Mat ca = model.c * model.a;
  Mat cb = model.c * model.b;

  Mat a_bar = Mat::Zero(3 * n, 3 * n);
  a_bar.block(0, 0, n, n) = model.a;
  a_bar.block(n, 0, n, n) = full.gain * ca;
  a_bar.block(n, n, n, n) = phi_full;
  a_bar.block(2 * n, 0, n, n) = d2 * ca;
  a_bar.block(2 * n, n, n, n) = d1;
  a_bar.block(2 * n, 2 * n, n, n) = g;

  Mat b_bar = Mat::Zero(3 * n, nu + m);
  b_bar.block(0, 0, n, nu) = model.b;
  b_bar.block(n, 0, n, nu) = full.gain * cb;
  b_bar.block(n, nu, n, m) = full.gain;
  b_bar.block(2 * n, 0, n, nu) = d2 * cb;
  b_bar.block(2 * n, nu, n, m) = d2;

  Mat u_bar = Mat::Zero(nu + m, nu + m);
  u_bar.topLeftCorner(nu, nu) = model.u_cov;
  u_bar.bottomRightCorner(m, m) = model.r_cov;

  // The joint map is block triangular, so its radius is the max of the
  // diagonal blocks' radii and stability is inherited from them.
  DiscrepancyReport out;
  out.joint_radius = std::max({spectral_radius(model.a),
                               spectral_radius(phi_full), spectral_radius(g)});
  if (out.joint_radius >= 1.0) {
    throw Unstable("stationary_discrepancy: coupled filter map has spectral "
                   "radius >= 1");
  }
  Mat joint = doubling_to_stationarity(
      a_bar, symmetrize(b_bar * u_bar * b_bar.transpose()));
  out.discrepancy = trace(joint.block(2 * n, 2 * n, n, n));
  out.direct_trace_difference = trace(red.err_cov) - trace(full.p);
  out.reduced_iterations = red.iterations;
  out.full_iterations = full.iterations;
  return out;
}

double stationary_discrepancy(const LgssModel& model,
                              const ProjectionPair& projection, double tol,
                              int max_iter) {
  return stationary_discrepancy_report(model, projection, tol, max_iter)
      .discrepancy;
}

Mat stationary_load_term(const LgssModel& model,
                         const ProjectionPair& projection,
                         const StationaryReduced& stationary) {
  const Eigen::Index n = model.dim();
  Mat shrink = Mat::Identity(n, n) - stationary.lift * projection.pi;
  Mat est_pinv = pseudoinverse(stationary.est_cov);
  Mat core = model.a * stationary.cross_cov * est_pinv *
                 stationary.cross_cov.transpose() * model.a.transpose() +
             stationary.gain * model.c * stationary.pred_cov;
  return symmetrize(shrink * core * shrink.transpose());
}

Mat filter_error_covariance(const LgssModel& model, const Mat& a_s,
                            const Mat& c_s, const Mat& gain,
                            const Mat& lift_map) {
  const Eigen::Index n = model.dim();
  const Eigen::Index nc = a_s.rows();
  const Eigen::Index nu = model.n_in();
  const Eigen::Index m = model.n_out();

  // Joint propagation of [x; xh]; the filter sees y_k = C(Ax + Bu) + w.
  Mat closed = a_s - gain * c_s * a_s;
  if (std::max(spectral_radius(model.a), spectral_radius(closed)) >= 1.0) {
    throw Unstable(
        "filter_error_covariance: joint propagation map has spectral radius "
        ">= 1");
  }
  Mat a_bar = Mat::Zero(n + nc, n + nc);
  a_bar.topLeftCorner(n, n) = model.a;
  a_bar.bottomLeftCorner(nc, n) = gain * model.c * model.a;
  a_bar.bottomRightCorner(nc, nc) = closed;

  Mat b_bar = Mat::Zero(n + nc, nu + m);
  b_bar.topLeftCorner(n, nu) = model.b;
  b_bar.block(n, 0, nc, nu) = gain * model.c * model.b;
  b_bar.bottomRightCorner(nc, m) = gain;

  Mat u_bar = Mat::Zero(nu + m, nu + m);
  u_bar.topLeftCorner(nu, nu) = model.u_cov;
  u_bar.bottomRightCorner(m, m) = model.r_cov;

  Mat joint = doubling_to_stationarity(
      a_bar, symmetrize(b_bar * u_bar * b_bar.transpose()));
  Mat sel = Mat::Zero(n, n + nc);
  sel.leftCols(n) = Mat::Identity(n, n);
  sel.rightCols(nc) = -lift_map;
  return symmetrize(sel * joint * sel.transpose());
}

} // namespace rokf
