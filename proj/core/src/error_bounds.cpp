#include "rokf/error_bounds.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <vector>

#include "rokf/errors.hpp"
#include "rokf/psd.hpp"

namespace rokf {

namespace {

constexpr double kStabilityMargin = 1e-12;

Mat innovation_cov(const LgssModel& model, const Mat& pred) {
  return symmetrize(model.c * pred * model.c.transpose() + model.r_cov);
}

Mat process_noise(const LgssModel& model) {
  return symmetrize(model.b * model.u_cov * model.b.transpose());
}

DareSolution nominal_dare(const LgssModel& model, double tol) {
  const Eigen::Index n = model.dim();
  try {
    return dare_solve(model.a, process_noise(model), model.c, model.r_cov,
                      Mat::Zero(n, n), tol);
  } catch (const NoConvergence&) {
    throw AssumptionFailed("nominal filter DARE did not converge");
  }
}

double sup_x1(const LgssModel& model, const Mat& x1_gram, double tol) {
  try {
    return sup_state_energy(model, x1_gram, tol);
  } catch (const Unstable&) {
    throw AssumptionFailed(
        "state map spectral radius >= 1: stationary state energy undefined");
  }
}

} // namespace

StabilityReport stability_report(const Mat& a, const Mat& gain, const Mat& c) {
  StabilityReport out;
  out.closed_loop = a - gain * c * a;
  out.rho = spectral_radius(out.closed_loop);
  out.stable = out.rho < 1.0 - kStabilityMargin;
  return out;
}

double l0_constant(const Mat& phi, double tol, int max_terms) {
  if (spectral_radius(phi) >= 1.0) {
    throw Unstable("l0_constant: spectral radius >= 1, series diverges");
  }
  const Mat phi2 = phi * phi;
  Mat power = Mat::Identity(phi.rows(), phi.cols());
  std::vector<double> terms;
  terms.push_back(1.0);  // ||Phi^0||
  double sum = 1.0;
  double best_q = std::numeric_limits<double>::infinity();
  int best_j = 0;
  for (int j = 1; j < max_terms; ++j) {
    power = power * phi2;
    double t = op_norm(power);
    terms.push_back(t);
    sum += t;
    if (t < best_q) {
      best_q = t;
      best_j = j;
    }
    // Submultiplicativity: every term best_j steps ahead shrinks by at least
    // best_q, so the remaining tail is dominated by the last best_j partial
    // block times a geometric series.
    if (best_q < 1.0 && j >= best_j) {
      double block = 0.0;
      for (int r = j - best_j + 1; r <= j; ++r) block += terms[static_cast<size_t>(r)];
      double tail = block * best_q / (1.0 - best_q);
      if (tail < tol * sum) return sum + tail;
    }
  }
  throw NoConvergence("l0_constant: series did not settle within max_terms");
}

Mat lyapunov_L_apply(const Mat& phi, const Mat& x, double tol) {
  return lyapunov_solve(phi, symmetrize(x), tol);
}

Mat delta_k_exact(const LgssModel& model, const Mat& m,
                  const DareSolution& dare_f, double tol) {
  const Eigen::Index n = model.dim();
  Mat w_b = process_noise(model) +
            symmetrize(model.a * m * model.a.transpose());
  DareSolution dare_b =
      dare_solve(model.a, w_b, model.c, model.r_cov, dare_f.p, tol);
  Mat sy_f = innovation_cov(model, dare_f.p_pred);
  Eigen::LLT<Mat> llt(sy_f);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("delta_k_exact: nominal innovation covariance");
  }
  Mat pred_diff = dare_b.p_pred - dare_f.p_pred;
  Mat right = llt.solve(model.c * pred_diff).transpose();  // diff C^* Sy^-1
  return (dare_b.gain * model.c - Mat::Identity(n, n)) * right;
}

double delta_k_bound(double c_hat1, double c_hat2, double tr_m) {
  return (c_hat1 + c_hat2 * tr_m) * tr_m;
}

std::pair<double, bool> tr_dp_bound(const BoundConstants& k, double tr_m) {
  double t = tr_m;
  double den = 1.0 - (k.c1 * t + k.c2 * t * t + k.c3 * t * t * t +
                      k.c4 * t * t * t * t);
  if (den <= 0.0) {
    return {std::numeric_limits<double>::infinity(), false};
  }
  return {(k.a * t + k.b * t * t) / den, true};
}

BoundConstants bound_constants(const LgssModel& model,
                               const DareSolution& dare_f, double l0,
                               double tr_m) {
  BoundConstants k;
  k.l0 = l0;
  k.tr_m = tr_m;

  double n_a = op_norm(model.a);
  double n_c = op_norm(model.c);
  double n_ca = op_norm(model.c * model.a);
  double n_kc = op_norm(dare_f.gain * model.c);
  Mat phi = model.a - dare_f.gain * model.c * model.a;
  double n_phi = op_norm(phi);
  Mat sy = innovation_cov(model, dare_f.p_pred);
  Mat sy_inv = sy.llt().solve(Mat::Identity(sy.rows(), sy.cols()));
  double n_syi = op_norm(sy_inv);
  double tr_syi = trace(sy_inv);
  double n_pred = op_norm(dare_f.p_pred);

  k.c_hat1 = (1.0 + n_pred * n_c * n_c * n_syi) * n_c * n_a * n_a * n_syi;
  k.c_hat2 = std::pow(n_a, 4) * std::pow(n_c, 3) * n_syi * n_syi;
  k.a = l0 * n_phi * n_phi;
  k.b = l0 * n_kc * n_kc * std::pow(n_a, 4) * n_c * n_c * tr_syi;
  k.c1 = 2.0 * l0 * n_phi * n_ca * k.c_hat1;
  k.c2 = 2.0 * l0 * n_phi * n_ca * k.c_hat2 + l0 * n_ca * n_ca * k.c_hat1 * k.c_hat1;
  k.c3 = 2.0 * l0 * n_ca * n_ca * k.c_hat1 * k.c_hat2;
  k.c4 = l0 * n_ca * n_ca * k.c_hat2 * k.c_hat2;

  k.norms["norm_a"] = n_a;
  k.norms["norm_c"] = n_c;
  k.norms["norm_ca"] = n_ca;
  k.norms["norm_kc"] = n_kc;
  k.norms["norm_closed_loop"] = n_phi;
  k.norms["norm_pred_cov"] = n_pred;
  k.norms["norm_innov_inv"] = n_syi;
  k.norms["trace_innov_inv"] = tr_syi;
  return k;
}

double sup_state_energy(const LgssModel& model, const Mat& gram, double tol,
                        int max_iter) {
  const Mat w = process_noise(model);
  Mat s_inf = lyapunov_solve(model.a, w, tol);
  double stationary = trace(gram * s_inf);
  if (max_abs(model.s0) == 0.0) return stationary;

  // Transient scan: the energy need not approach its limit monotonically
  // when started from s0, so track the running max until the limit is hit.
  Mat s = symmetrize(model.s0);
  double best = std::max(stationary, trace(gram * s));
  int settled = 0;
  for (int k = 0; k < max_iter; ++k) {
    s = lyapunov_step(s, model.a, w);
    double val = trace(gram * s);
    if (val > best) best = val;
    if (std::abs(val - stationary) < 1e-9 * (1.0 + std::abs(stationary))) {
      if (++settled >= 50) return best;
    } else {
      settled = 0;
    }
  }
  throw NoConvergence("sup_state_energy: transient scan did not settle");
}

BoundReport a_priori_bound(const LgssModel& model,
                           const ProjectionPair& projection, const Mat& x1_gram,
                           double tol) {
  const Eigen::Index n = model.dim();
  if (spectral_radius(model.a) >= 1.0) {
    throw AssumptionFailed(
        "a_priori_bound: state map spectral radius >= 1 (Lyapunov hypothesis)");
  }
  DareSolution dare_f = nominal_dare(model, tol);
  StabilityReport stab = stability_report(model.a, dare_f.gain, model.c);
  if (!stab.stable) {
    throw AssumptionFailed("a_priori_bound: nominal closed loop not stable");
  }

  Mat s_inf = lyapunov_solve(model.a, process_noise(model), tol);
  Mat complement = Mat::Identity(n, n) - projection.pi_state();
  double tr_m = trace(symmetrize(complement * s_inf * complement.transpose()));
  double l0 = l0_constant(stab.closed_loop, 1e-10);
  double sup = sup_x1(model, x1_gram, tol);

  BoundReport rep;
  rep.theorem = BoundTheorem::a_priori;
  rep.constants = bound_constants(model, dare_f, l0, tr_m);
  rep.constants.norms["sup_x1"] = sup;
  std::tie(rep.tr_dp_bound, rep.denominator_ok) =
      tr_dp_bound(rep.constants, tr_m);
  rep.nu = weighted_operator_norm(complement, x1_gram, Mat::Identity(n, n));
  rep.leading_term = (1.0 + rep.constants.a) * sup * rep.nu * rep.nu;
  rep.higher_term = 0.0;  // reported through the trace-route fields instead
  rep.total_bound = rep.leading_term;
  rep.closed_loop_radius = stab.rho;
  rep.stable = true;
  return rep;
}

BoundReport a_posteriori_bound(const LgssModel& model,
                               const ProjectionPair& projection,
                               const Mat& k_inf, const Mat& q_inf,
                               const Mat& m_inf, const Mat& x1_gram,
                               double tol) {
  const Eigen::Index n = model.dim();
  const Eigen::Index nc = projection.pi.rows();
  if (max_abs(projection.pi * q_inf - Mat::Identity(nc, nc)) > 1e-6) {
    throw AssumptionFailed(
        "a_posteriori_bound: lift is not a right inverse of the projection "
        "(schedule not converged?)");
  }
  StabilityReport stab_red = stability_report(model.a, k_inf, model.c);
  if (!stab_red.stable) {
    throw AssumptionFailed("a_posteriori_bound: reduced closed loop not stable");
  }
  DareSolution dare_f = nominal_dare(model, tol);
  StabilityReport stab_f = stability_report(model.a, dare_f.gain, model.c);
  if (!stab_f.stable) {
    throw AssumptionFailed("a_posteriori_bound: nominal closed loop not stable");
  }

  double l_tilde = l0_constant(stab_red.closed_loop, 1e-10);
  double sup = sup_x1(model, x1_gram, tol);

  BoundReport rep;
  rep.theorem = BoundTheorem::a_posteriori;
  rep.constants = bound_constants(model, dare_f, l_tilde, trace(m_inf));
  rep.constants.norms["sup_x1"] = sup;
  rep.constants.norms["rho_reduced_loop"] = stab_red.rho;
  std::tie(rep.tr_dp_bound, rep.denominator_ok) =
      tr_dp_bound(rep.constants, rep.constants.tr_m);
  Mat complement = Mat::Identity(n, n) - projection.pi_state();
  rep.nu = weighted_operator_norm(complement, x1_gram, Mat::Identity(n, n));
  double nu2 = rep.nu * rep.nu;
  rep.leading_term = (1.0 + rep.constants.a) * sup * nu2;
  rep.higher_term = rep.constants.b * sup * sup * nu2 * nu2;
  rep.total_bound = rep.leading_term + rep.higher_term;
  rep.closed_loop_radius = stab_red.rho;
  rep.stable = true;
  return rep;
}

BoundReport remark43_bound(const LgssModel& model,
                           const ProjectionPair& projection, const Mat& k_inf,
                           const Mat& q_inf, const Mat& m_inf,
                           const Mat& x1_gram, double tol) {
  const Eigen::Index n = model.dim();
  const Eigen::Index nc = projection.pi.rows();
  if (max_abs(projection.pi * q_inf - Mat::Identity(nc, nc)) > 1e-6) {
    throw AssumptionFailed(
        "remark43_bound: lift is not a right inverse of the projection");
  }
  StabilityReport stab_red = stability_report(model.a, k_inf, model.c);
  if (!stab_red.stable) {
    throw AssumptionFailed("remark43_bound: reduced closed loop not stable");
  }
  if (spectral_radius(model.a) >= 1.0) {
    throw AssumptionFailed("remark43_bound: state map spectral radius >= 1");
  }

  const Mat w = process_noise(model);
  Mat s_inf = lyapunov_solve(model.a, w, tol);
  Mat complement = Mat::Identity(n, n) - projection.pi_state();
  double tr_m = trace(symmetrize(complement * s_inf * complement.transpose()));
  double l_tilde = l0_constant(stab_red.closed_loop, 1e-10);
  double sup = sup_x1(model, x1_gram, tol);

  DareSolution dare_a;
  try {
    dare_a = dare_solve(model.a,
                        w + symmetrize(model.a * m_inf * model.a.transpose()),
                        model.c, model.r_cov, Mat::Zero(n, n), tol);
  } catch (const NoConvergence&) {
    throw AssumptionFailed("remark43_bound: perturbed DARE did not converge");
  }

  double n_a = op_norm(model.a);
  double n_c = op_norm(model.c);
  double n_ca = op_norm(model.c * model.a);
  double n_pred_a = op_norm(dare_a.p_pred);
  double min_r = min_eig_sym(symmetrize(model.r_cov));
  if (min_r <= 0.0) {
    throw AssumptionFailed("remark43_bound: measurement covariance not PD");
  }
  Mat r_inv = symmetrize(model.r_cov)
                  .llt()
                  .solve(Mat::Identity(model.n_out(), model.n_out()));
  double tr_r_inv = trace(r_inv);

  // Relaxed constants: every nominal-DARE norm replaced by its computable
  // dominator. The closed-loop norm is bounded through the gain perturbation.
  double c_hat1_r = (1.0 + n_pred_a * n_c * n_c / min_r) * n_c * n_a * n_a / min_r;
  double c_hat2_r = std::pow(n_a, 4) * std::pow(n_c, 3) / (min_r * min_r);
  double dk_r = delta_k_bound(c_hat1_r, c_hat2_r, tr_m);
  double n_phi_red = op_norm(stab_red.closed_loop);
  double phi_sq_r = 2.0 * n_phi_red * n_phi_red + 2.0 * n_ca * n_ca * dk_r * dk_r;

  BoundReport rep;
  rep.theorem = BoundTheorem::remark43;
  BoundConstants k;
  k.l0 = l_tilde;
  k.tr_m = tr_m;
  k.c_hat1 = c_hat1_r;
  k.c_hat2 = c_hat2_r;
  k.a = l_tilde * phi_sq_r;
  double b_factor = n_pred_a * n_c * n_c / min_r;
  k.b = l_tilde * b_factor * b_factor * std::pow(n_a, 4) * n_c * n_c * tr_r_inv;
  double n_phi_r = std::sqrt(phi_sq_r);
  k.c1 = 2.0 * l_tilde * n_phi_r * n_ca * c_hat1_r;
  k.c2 = 2.0 * l_tilde * n_phi_r * n_ca * c_hat2_r +
         l_tilde * n_ca * n_ca * c_hat1_r * c_hat1_r;
  k.c3 = 2.0 * l_tilde * n_ca * n_ca * c_hat1_r * c_hat2_r;
  k.c4 = l_tilde * n_ca * n_ca * c_hat2_r * c_hat2_r;
  k.norms["norm_a"] = n_a;
  k.norms["norm_c"] = n_c;
  k.norms["norm_ca"] = n_ca;
  k.norms["norm_closed_loop_relaxed_sq"] = phi_sq_r;
  k.norms["norm_pred_cov_perturbed"] = n_pred_a;
  k.norms["min_eig_r"] = min_r;
  k.norms["trace_r_inv"] = tr_r_inv;
  k.norms["delta_k_relaxed"] = dk_r;
  k.norms["sup_x1"] = sup;
  rep.constants = k;
  std::tie(rep.tr_dp_bound, rep.denominator_ok) = tr_dp_bound(k, tr_m);
  rep.nu = weighted_operator_norm(complement, x1_gram, Mat::Identity(n, n));
  double nu2 = rep.nu * rep.nu;
  rep.leading_term = (1.0 + k.a) * sup * nu2;
  rep.higher_term = k.b * sup * sup * nu2 * nu2;
  rep.total_bound = rep.leading_term + rep.higher_term;
  rep.closed_loop_radius = stab_red.rho;
  rep.stable = true;
  return rep;
}

DeltaPDecomposition delta_p_exact(const LgssModel& model, const Mat& m,
                                  double tol) {
  const Eigen::Index n = model.dim();
  const Mat w = process_noise(model);
  Mat ama = symmetrize(model.a * m * model.a.transpose());

  DeltaPDecomposition out;
  out.dare_f = dare_solve(model.a, w, model.c, model.r_cov, Mat::Zero(n, n), tol);
  out.dare_b = dare_solve(model.a, w + ama, model.c, model.r_cov, out.dare_f.p, tol);
  out.delta_p = symmetrize(out.dare_b.p - out.dare_f.p);

  const Mat& kf = out.dare_f.gain;
  const Mat& kb = out.dare_b.gain;
  Mat phi_f = model.a - kf * model.c * model.a;
  Mat phi_b = model.a - kb * model.c * model.a;
  Mat ikc = Mat::Identity(n, n) - kf * model.c;
  Mat delta_k = kf - kb;

  // S' uses the first-order-inflated prediction, as in the decomposition's
  // derivation (not the perturbed DARE's own innovation covariance).
  Mat s_prime = symmetrize(
      model.c * (out.dare_f.p_pred + ama) * model.c.transpose() + model.r_cov);
  Eigen::LLT<Mat> llt(s_prime);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("delta_p_exact: inflated innovation covariance");
  }
  Mat s_prime_inv = llt.solve(Mat::Identity(s_prime.rows(), s_prime.cols()));

  out.e1 = symmetrize(ikc * ama * ikc.transpose());
  Mat cross = ikc * ama * model.c.transpose() * s_prime_inv * model.c * ama *
              ikc.transpose();
  out.e2 = -symmetrize(cross);
  Mat dkca = delta_k * model.c * model.a;
  out.h1 = symmetrize(dkca * out.delta_p * phi_f.transpose() +
                      phi_f * out.delta_p * dkca.transpose() +
                      dkca * out.delta_p * dkca.transpose());
  Mat inner = model.a.transpose() * model.c.transpose() * s_prime_inv *
              model.c * model.a;
  out.h2 = symmetrize(phi_b * out.delta_p * inner * out.delta_p *
                      phi_b.transpose());

  Mat rhs_common = out.e1 + out.e2 + out.h2;
  out.residual_nominal =
      max_abs(out.delta_p - phi_f * out.delta_p * phi_f.transpose() -
              rhs_common - out.h1);
  out.residual_perturbed = max_abs(
      out.delta_p - phi_b * out.delta_p * phi_b.transpose() - rhs_common);
  return out;
}

} // namespace rokf
