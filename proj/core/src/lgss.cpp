#include "rokf/lgss.hpp"

#include <stdexcept>

#include "rokf/errors.hpp"
#include "rokf/psd.hpp"
#include "rokf/rng.hpp"

namespace rokf {

void LgssModel::validate() const {
  const auto n = a.rows();
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (a.cols() != n) fail("LgssModel: A must be square");
  if (b.rows() != n) fail("LgssModel: B row count must match state dimension");
  if (c.cols() != n) fail("LgssModel: C column count must match state dimension");
  if (u_cov.rows() != b.cols() || u_cov.cols() != b.cols()) {
    fail("LgssModel: U shape");
  }
  if (r_cov.rows() != c.rows() || r_cov.cols() != c.rows()) {
    fail("LgssModel: R shape");
  }
  if (s0.rows() != n || s0.cols() != n) fail("LgssModel: S0 shape");
  if (mean0.size() != n) fail("LgssModel: mean0 length");
  auto symmetric = [](const Mat& s) {
    return (s - s.transpose()).cwiseAbs().maxCoeff() <=
           1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff());
  };
  if (!symmetric(u_cov) || !symmetric(r_cov) || !symmetric(s0)) {
    fail("LgssModel: covariance blocks must be symmetric");
  }
  if (min_eig_sym(r_cov) <= 0.0) {
    fail("LgssModel: R must be strictly positive definite");
  }
}

Trajectory simulate(const LgssModel& model, int horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
  const auto n = model.dim();
  const auto q = model.n_in();
  const auto m = model.n_out();
  const Mat s0_half = psd_sqrt(model.s0);
  const Mat u_half = psd_sqrt(model.u_cov);
  const Mat r_half = psd_sqrt(model.r_cov);

  Rng rng(seed);
  Trajectory out;
  out.seed = seed;
  out.states.resize(n, horizon + 1);
  out.outputs.resize(m, horizon);
  out.states.col(0) = model.mean0 + s0_half * rng.gauss_vec(n);
  for (int k = 1; k <= horizon; ++k) {
    const Vec u_k = u_half * rng.gauss_vec(q);
    const Vec w_k = r_half * rng.gauss_vec(m);
    out.states.col(k) = model.a * out.states.col(k - 1) + model.b * u_k;
    out.outputs.col(k - 1) = model.c * out.states.col(k) + w_k;
  }
  return out;
}

Eigen::Index JointGaussian::block_offset(Eigen::Index i) const {
  Eigen::Index off = 0;
  for (Eigen::Index j = 0; j < i; ++j) off += block_sizes[j];
  return off;
}

JointGaussian build_joint(const LgssModel& model, int horizon) {
  const auto n = model.dim();
  const auto m = model.n_out();
  const int big_k = horizon;

  // State means and covariances, plus transition powers for cross terms.
  std::vector<Vec> mu(big_k + 1);
  std::vector<Mat> s(big_k + 1);
  mu[0] = model.mean0;
  s[0] = symmetrize(model.s0);
  const Mat bub = model.b * model.u_cov * model.b.transpose();
  for (int k = 1; k <= big_k; ++k) {
    mu[k] = model.a * mu[k - 1];
    s[k] = symmetrize(model.a * s[k - 1] * model.a.transpose() + bub);
  }
  std::vector<Mat> a_pow(big_k + 1);  // a_pow[d] = A^d
  a_pow[0] = Mat::Identity(n, n);
  for (int d = 1; d <= big_k; ++d) a_pow[d] = model.a * a_pow[d - 1];

  // Cov(x_i, x_j) = S_i (A^{j-i})^T for i <= j.
  auto cov_xx = [&](int i, int j) -> Mat {
    if (i <= j) return s[i] * a_pow[j - i].transpose();
    return a_pow[i - j] * s[j];
  };

  const Eigen::Index total = n + Eigen::Index(big_k) * m;
  JointGaussian joint;
  joint.mean.resize(total);
  joint.cov.resize(total, total);
  joint.block_sizes.assign(1, n);
  for (int k = 1; k <= big_k; ++k) joint.block_sizes.push_back(m);

  joint.mean.head(n) = mu[big_k];
  for (int j = 1; j <= big_k; ++j) {
    joint.mean.segment(n + (j - 1) * m, m) = model.c * mu[j];
  }
  joint.cov.topLeftCorner(n, n) = s[big_k];
  for (int j = 1; j <= big_k; ++j) {
    const Mat cx = cov_xx(big_k, j) * model.c.transpose();  // Cov(x_K, y_j)
    joint.cov.block(0, n + (j - 1) * m, n, m) = cx;
    joint.cov.block(n + (j - 1) * m, 0, m, n) = cx.transpose();
    for (int i = 1; i <= j; ++i) {
      Mat cy = model.c * cov_xx(i, j) * model.c.transpose();
      if (i == j) cy += model.r_cov;
      joint.cov.block(n + (i - 1) * m, n + (j - 1) * m, m, m) = cy;
      joint.cov.block(n + (j - 1) * m, n + (i - 1) * m, m, m) = cy.transpose();
    }
  }
  joint.cov = symmetrize(joint.cov);
  return joint;
}

Conditioned condition(const JointGaussian& joint, Eigen::Index target_block,
                      const std::vector<Eigen::Index>& given_blocks,
                      const Vec& observed_values) {
  const Eigen::Index nt = joint.block_size(target_block);
  const Eigen::Index t_off = joint.block_offset(target_block);
  Eigen::Index ng = 0;
  for (auto g : given_blocks) ng += joint.block_size(g);
  if (observed_values.size() != ng) {
    throw std::invalid_argument("condition: observed values size mismatch");
  }

  Mat s_tg(nt, ng), s_gg(ng, ng);
  Vec m_g(ng);
  Eigen::Index col = 0;
  for (auto g : given_blocks) {
    const Eigen::Index go = joint.block_offset(g);
    const Eigen::Index gs = joint.block_size(g);
    s_tg.middleCols(col, gs) = joint.cov.block(t_off, go, nt, gs);
    m_g.segment(col, gs) = joint.mean.segment(go, gs);
    Eigen::Index row = 0;
    for (auto g2 : given_blocks) {
      const Eigen::Index g2o = joint.block_offset(g2);
      const Eigen::Index g2s = joint.block_size(g2);
      s_gg.block(row, col, g2s, gs) = joint.cov.block(g2o, go, g2s, gs);
      row += g2s;
    }
    col += gs;
  }

  const Mat s_gg_pinv = pseudoinverse(s_gg);
  Conditioned post;
  post.mean = joint.mean.segment(t_off, nt) +
              s_tg * s_gg_pinv * (observed_values - m_g);
  post.cov = symmetrize(joint.cov.block(t_off, t_off, nt, nt) -
                 s_tg * s_gg_pinv * s_tg.transpose());
  return post;
}

Vec condition_two_stage(const JointGaussian& joint, const Vec& h2_value,
                        const Vec& h3_value, bool strict) {
  if (joint.blocks() != 3) {
    throw std::invalid_argument("condition_two_stage: need exactly 3 blocks");
  }
  const Eigen::Index n1 = joint.block_size(0);
  const Eigen::Index n2 = joint.block_size(1);
  const Eigen::Index n3 = joint.block_size(2);
  if (h2_value.size() != n2 || h3_value.size() != n3) {
    throw std::invalid_argument("condition_two_stage: observed size mismatch");
  }
  const Vec m1 = joint.mean.head(n1);
  const Vec m2 = joint.mean.segment(n1, n2);
  const Vec m3 = joint.mean.tail(n3);
  const Mat s12 = joint.cov.block(0, n1, n1, n2);
  const Mat s13 = joint.cov.block(0, n1 + n2, n1, n3);
  const Mat s22 = joint.cov.block(n1, n1, n2, n2);
  const Mat s23 = joint.cov.block(n1, n1 + n2, n2, n3);
  const Mat s33 = joint.cov.block(n1 + n2, n1 + n2, n3, n3);

  const Mat s22_pinv = pseudoinverse(s22);
  // First stage: condition everything on h2.
  const Vec e1_given_2 = m1 + s12 * s22_pinv * (h2_value - m2);
  const Vec e3_given_2 = m3 + s23.transpose() * s22_pinv * (h2_value - m2);
  const Mat cross = s13 - s12 * s22_pinv * s23;          // Cov(h1 res, h3 res)
  const Mat innov = symmetrize(s33 - s23.transpose() * s22_pinv * s23);

  if (strict) {
    Eigen::SelfAdjointEigenSolver<Mat> es(innov, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 1e-12 * std::max(hi, 0.0)) {
      throw SingularInnovation(
          "condition_two_stage: innovation covariance singular");
    }
  }
  return e1_given_2 + cross * pseudoinverse(innov) * (h3_value - e3_given_2);
}

} // namespace rokf
