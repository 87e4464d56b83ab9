#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rokf/filters.hpp"
#include "rokf/lgss.hpp"
#include "rokf/psd.hpp"
#include "rokf/riccati.hpp"
#include "rokf/wave.hpp"
#include "test_support.hpp"

using namespace rokf;
using namespace test_support;

namespace {

// run the offline+online full filter over a trajectory, returning x^_K
Vec run_full(const FullKfSchedule& schedule, const Trajectory& traj) {
  Vec est = schedule.mean0;
  for (int k = 1; k <= traj.horizon(); ++k) {
    est = full_kf_step(schedule, k, est, traj.outputs.col(k - 1));
  }
  return est;
}

Vec run_reduced(const ReducedGainSchedule& schedule, const Trajectory& traj) {
  Vec est = schedule.projection.pi * schedule.state_mean[0];
  for (int k = 1; k <= traj.horizon(); ++k) {
    est = reduced_step(schedule, k, est, traj.outputs.col(k - 1));
  }
  return est;
}

}  // namespace

TEST_CASE("full filter with C = 0 degenerates to the Lyapunov recursion") {
  std::mt19937_64 rng(21);
  LgssModel m = rand_model(rng, ModelSpec{});
  m.c = Mat::Zero(2, 4);

  FullKfSchedule schedule = full_kf_offline(m, 5);
  Mat w = m.b * m.u_cov * m.b.transpose();
  Mat p = m.s0;
  for (int k = 1; k <= 5; ++k) {
    p = m.a * p * m.a.transpose() + w;
    CHECK(max_abs_diff(schedule.gain(k), Mat::Zero(4, 2)) < 1e-14);
    CHECK(max_abs_diff(schedule.cov(k), p) < 1e-10);
  }
}

TEST_CASE("full filter: scalar first step by hand") {
  LgssModel m;
  m.a = Mat::Zero(1, 1);
  m.b = Mat::Identity(1, 1);
  m.c = Mat::Identity(1, 1);
  m.u_cov = Mat::Identity(1, 1);
  m.r_cov = Mat::Identity(1, 1);
  m.mean0 = Vec::Zero(1);
  m.s0 = Mat::Zero(1, 1);

  FullKfSchedule schedule = full_kf_offline(m, 1);
  CHECK(schedule.pred_cov(1)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(schedule.gain(1)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(schedule.cov(1)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("full filter equals the Gaussian-conditioning oracle") {
  std::mt19937_64 rng(22);
  for (int horizon : {3, 4}) {
    LgssModel m = rand_model(rng, ModelSpec{});
    Trajectory traj = simulate(m, horizon, 17 + horizon);
    Vec est = run_full(full_kf_offline(m, horizon), traj);

    JointGaussian joint = build_joint(m, horizon);
    std::vector<Eigen::Index> given;
    Vec stacked(2 * horizon);
    for (int k = 1; k <= horizon; ++k) {
      given.push_back(k);
      stacked.segment(2 * (k - 1), 2) = traj.outputs.col(k - 1);
    }
    Conditioned oracle = condition(joint, 0, given, stacked);
    CHECK(max_abs_diff(est, oracle.mean) < 1e-9);
    CHECK(max_abs_diff(full_kf_offline(m, horizon).final_cov, oracle.cov) <
          1e-9);
  }
}

TEST_CASE("full filter: zero innovation propagates the prediction") {
  std::mt19937_64 rng(23);
  LgssModel m = rand_model(rng, ModelSpec{});
  FullKfSchedule schedule = full_kf_offline(m, 3);
  Vec prev = rand_vec(rng, 4);
  Vec y = m.c * (m.a * prev);  // innovation is exactly zero
  CHECK(max_abs_diff(full_kf_step(schedule, 2, prev, y), Vec(m.a * prev)) <
        1e-12);
}

TEST_CASE("reduced filter: first-step cross covariance identity") {
  // with S~_0 = 0 the first term of V_1 vanishes, leaving
  // V_1 = K_1 (C P~_1 C^* + R) (Pi K_1)^T and S~_1 = Pi V_1
  std::mt19937_64 rng(24);
  LgssModel m = rand_model(rng, ModelSpec{});
  ProjectionPair proj = rand_projection(rng, 4, 2);
  ReducedGainSchedule schedule = reduced_offline(m, proj, 2);

  Mat sy = m.c * schedule.pred_cov(1) * m.c.transpose() + m.r_cov;
  Mat v1 = schedule.gain(1) * sy * (proj.pi * schedule.gain(1)).transpose();
  CHECK(max_abs_diff(schedule.cross_cov(1), v1) < 1e-10);
  CHECK(max_abs_diff(schedule.est_cov(1), Mat(proj.pi * v1)) < 1e-10);
}

TEST_CASE("reduced filter with the identity projection is the full filter") {
  std::mt19937_64 rng(25);
  LgssModel m = rand_model(rng, ModelSpec{});
  ProjectionPair proj = ProjectionPair::identity(4);
  const int horizon = 12;
  FullKfSchedule full = full_kf_offline(m, horizon);
  ReducedGainSchedule reduced = reduced_offline(m, proj, horizon);

  Trajectory traj = simulate(m, horizon, 5);
  Vec full_est = m.mean0;
  Vec red_est = proj.pi * m.mean0;
  for (int k = 1; k <= horizon; ++k) {
    full_est = full_kf_step(full, k, full_est, traj.outputs.col(k - 1));
    red_est = reduced_step(reduced, k, red_est, traj.outputs.col(k - 1));
    CHECK(max_abs_diff(red_est, full_est) < 1e-10);
    CHECK(max_abs_diff(reduced.gain(k), full.gain(k)) < 1e-10);
    CHECK(max_abs_diff(reduced.err_cov(k), full.cov(k)) < 1e-10);
  }
}

TEST_CASE("reduced filter: single-step estimate matches conditioning") {
  std::mt19937_64 rng(26);
  ModelSpec spec;
  spec.zero_mean = true;
  LgssModel m = rand_model(rng, spec);
  ProjectionPair proj = rand_projection(rng, 4, 2);
  ReducedGainSchedule schedule = reduced_offline(m, proj, 1);

  Trajectory traj = simulate(m, 1, 31);
  Vec red = reduced_step(schedule, 1, Vec(proj.pi * m.mean0),
                         traj.outputs.col(0));

  JointGaussian joint = build_joint(m, 1);
  Conditioned oracle = condition(joint, 0, {1}, traj.outputs.col(0));
  CHECK(max_abs_diff(red, Vec(proj.pi * oracle.mean)) < 1e-10);
}

TEST_CASE("lift is a section of the projection") {
  std::mt19937_64 rng(27);
  LgssModel m = rand_model(rng, ModelSpec{});  // nonzero mean0
  ProjectionPair proj = rand_projection(rng, 4, 2);
  ReducedGainSchedule schedule = reduced_offline(m, proj, 6);
  for (int k : {0, 1, 3, 6}) {
    Vec coarse = rand_vec(rng, 2);
    Vec lifted = lift(schedule, k, coarse);
    CHECK(max_abs_diff(Vec(proj.pi * lifted), coarse) < 1e-10);
  }
}

TEST_CASE("covariance invariants of the reduced schedule") {
  std::mt19937_64 rng(28);
  for (int trial = 0; trial < 10; ++trial) {
    LgssModel m = rand_model(rng, ModelSpec{});
    ProjectionPair proj = rand_projection(rng, 4, 1 + trial % 3);
    ReducedGainSchedule schedule = reduced_offline(m, proj, 8);
    for (int k = 0; k <= 8; ++k) {
      CHECK(is_psd_floor(schedule.err_cov(k)));
      CHECK(is_psd_floor(schedule.est_cov(k)));
      // P_k = S_k - Q S~ Q^* <= S_k
      CHECK(psd_leq_floor(schedule.err_cov(k), schedule.s_cov(k)));
    }
  }
}

TEST_CASE("full filter is at least as informative as the reduced one") {
  WaveParams params;
  params.n_f = 9;
  params.n_c = 4;
  WaveModel wm = build_wave_model(params);
  ProjectionPair proj = build_mesh_projection(9, 4, wm.fine_map);
  const int horizon = 30;
  FullKfSchedule full = full_kf_offline(wm.model, horizon);
  ReducedGainSchedule reduced = reduced_offline(wm.model, proj, horizon);
  for (int k = 0; k <= horizon; ++k) {
    // early steps can tie to within roundoff of two different recursions
    CHECK(full.tr_cov[k] <=
          reduced.tr_err_cov[k] + 1e-7 * (1.0 + full.tr_cov[k]));
  }
}

TEST_CASE("nonzero means shift the reduced estimates, not the errors") {
  std::mt19937_64 rng(29);
  LgssModel m = rand_model(rng, ModelSpec{});
  ProjectionPair proj = rand_projection(rng, 4, 2);
  const int horizon = 8;

  LgssModel centered = m;
  centered.mean0 = Vec::Zero(4);

  ReducedGainSchedule shifted = reduced_offline(m, proj, horizon);
  ReducedGainSchedule zero = reduced_offline(centered, proj, horizon);

  Trajectory traj = simulate(m, horizon, 41);
  Vec est_m = proj.pi * m.mean0;
  Vec est_0 = Vec::Zero(2);
  for (int k = 1; k <= horizon; ++k) {
    est_m = reduced_step(shifted, k, est_m, traj.outputs.col(k - 1));
    Vec y_centered = traj.outputs.col(k - 1) - shifted.output_mean[k - 1];
    est_0 = reduced_step(zero, k, est_0, y_centered);
    CHECK(max_abs_diff(est_m, Vec(est_0 + shifted.coarse_mean[k])) < 1e-9);
    CHECK(max_abs_diff(shifted.err_cov(k), zero.err_cov(k)) < 1e-12);
  }
}

TEST_CASE("Monte Carlo error energy matches tr P_k") {
  std::mt19937_64 rng(30);
  ModelSpec spec;
  spec.zero_mean = true;
  LgssModel m = rand_model(rng, spec);
  ProjectionPair proj = rand_projection(rng, 4, 2);
  const int horizon = 10;
  ReducedGainSchedule schedule = reduced_offline(m, proj, horizon);

  const int n_traj = 10000;
  double sum_sq = 0.0;
  double sum_inner = 0.0, sum_inner_sq = 0.0;
  for (int i = 0; i < n_traj; ++i) {
    Trajectory traj = simulate(m, horizon, 1000 + i);
    Vec est = run_reduced(schedule, traj);
    Vec lifted = lift(schedule, horizon, est);
    Vec err = traj.states.col(horizon) - lifted;
    sum_sq += err.squaredNorm();
    double inner = lifted.dot(err);  // orthogonality of estimate and error
    sum_inner += inner;
    sum_inner_sq += inner * inner;
  }
  double mean_sq = sum_sq / n_traj;
  double expected = trace(schedule.err_cov(horizon));
  CHECK(std::abs(mean_sq - expected) < 0.05 * expected);

  double mean_inner = sum_inner / n_traj;
  double var_inner =
      sum_inner_sq / n_traj - mean_inner * mean_inner;
  double se = std::sqrt(var_inner / n_traj);
  CHECK(std::abs(mean_inner) <= 3.0 * se);
}

TEST_CASE("naive coarse filter with the identity projection is full") {
  std::mt19937_64 rng(31);
  LgssModel m = rand_model(rng, ModelSpec{});
  FullKfSchedule naive =
      naive_coarse_offline(m, ProjectionPair::identity(4), 6);
  FullKfSchedule full = full_kf_offline(m, 6);
  for (int k = 1; k <= 6; ++k) {
    CHECK(max_abs_diff(naive.gain(k), full.gain(k)) < 1e-12);
    CHECK(max_abs_diff(naive.cov(k), full.cov(k)) < 1e-12);
  }
}

TEST_CASE("naive coarse model projects every operator") {
  std::mt19937_64 rng(32);
  LgssModel m = rand_model(rng, ModelSpec{});
  ProjectionPair proj = rand_projection(rng, 4, 2);
  LgssModel coarse = naive_coarse_model(m, proj);
  CHECK(max_abs_diff(coarse.a, Mat(proj.pi * m.a * proj.pi_adjoint())) <
        1e-13);
  CHECK(max_abs_diff(coarse.b, Mat(proj.pi * m.b)) < 1e-13);
  CHECK(max_abs_diff(coarse.c, Mat(m.c * proj.pi_adjoint())) < 1e-13);
  CHECK(max_abs_diff(coarse.s0, Mat(proj.pi * m.s0 * proj.pi_adjoint())) <
        1e-13);
  CHECK(max_abs_diff(coarse.mean0, Vec(proj.pi * m.mean0)) < 1e-13);
  CHECK(max_abs_diff(coarse.u_cov, m.u_cov) == 0.0);
  CHECK(max_abs_diff(coarse.r_cov, m.r_cov) == 0.0);
}

TEST_CASE("stationary approximate filter under the identity projection") {
  std::mt19937_64 rng(33);
  LgssModel m = rand_model(rng, ModelSpec{});
  ApproxStationaryFilter filt =
      approx_stationary_filter(m, ProjectionPair::identity(4));
  CHECK(max_abs(filt.v_hat) < 1e-9);
  CHECK(max_abs_diff(filt.q_hat, Mat::Identity(4, 4)) < 1e-9);

  Mat w = m.b * m.u_cov * m.b.transpose();
  DareSolution full = dare_solve(m.a, w, m.c, m.r_cov, m.s0);
  CHECK(max_abs_diff(filt.gain, full.gain) < 1e-7);
  CHECK(max_abs_diff(filt.p, full.p) < 1e-7);
}

TEST_CASE("stationary residual covariance lives off the coarse subspace") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 5; ++trial) {
    LgssModel m = rand_model(rng, ModelSpec{});
    ProjectionPair proj = rand_projection(rng, 4, 2);
    ApproxStationaryFilter filt = approx_stationary_filter(m, proj);
    CHECK(max_abs(proj.pi * filt.v_hat * proj.pi_adjoint()) < 1e-9);
    CHECK(is_psd_floor(filt.v_hat));
  }
}

TEST_CASE("retention policy keeps traces and finals only") {
  std::mt19937_64 rng(35);
  LgssModel m = rand_model(rng, ModelSpec{});
  ProjectionPair proj = rand_projection(rng, 4, 2);
  const int horizon = 20;

  FullKfSchedule full_all = full_kf_offline(m, horizon);
  FullKfSchedule full_min =
      full_kf_offline(m, horizon, RetentionPolicy::stepping_only(horizon));
  CHECK(full_min.covs.empty());
  CHECK(max_abs_diff(full_min.final_cov, full_all.final_cov) == 0.0);
  for (int k = 0; k <= horizon; ++k) {
    CHECK(full_min.tr_cov[k] == full_all.tr_cov[k]);
  }

  ReducedGainSchedule red_all = reduced_offline(m, proj, horizon);
  ReducedGainSchedule red_min =
      reduced_offline(m, proj, horizon, RetentionPolicy::stepping_only(horizon));
  CHECK(red_min.err_covs.empty());
  CHECK(max_abs_diff(red_min.final_err_cov, red_all.final_err_cov) == 0.0);
  CHECK(max_abs_diff(red_min.lift_op(horizon), red_all.lift_op(horizon)) ==
        0.0);

  // online stepping agrees between the two retention modes
  Trajectory traj = simulate(m, horizon, 61);
  Vec a_est = proj.pi * m.mean0, b_est = proj.pi * m.mean0;
  for (int k = 1; k <= horizon; ++k) {
    a_est = reduced_step(red_all, k, a_est, traj.outputs.col(k - 1));
    b_est = reduced_step(red_min, k, b_est, traj.outputs.col(k - 1));
  }
  CHECK(max_abs_diff(a_est, b_est) == 0.0);
}
