#include "rokf/wave.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "rokf/errors.hpp"
#include "rokf/psd.hpp"

namespace rokf {

namespace {

// 10-point Gauss-Legendre rule on [-1, 1].
constexpr int kQuadPoints = 10;
constexpr double kGaussNodes[kQuadPoints] = {
    -0.9739065285171717,  -0.8650633666889845, -0.6794095682990244,
    -0.4333953941292472,  -0.14887433898163122, 0.14887433898163122,
    0.4333953941292472,   0.6794095682990244,  0.8650633666889845,
    0.9739065285171717};
constexpr double kGaussWeights[kQuadPoints] = {
    0.06667134430868807, 0.14945134915058036, 0.219086362515982,
    0.2692667193099965,  0.295524224714753,   0.295524224714753,
    0.2692667193099965,  0.219086362515982,   0.14945134915058036,
    0.06667134430868807};

} // namespace

FemMesh1D::FemMesh1D(int n) : n_interior(n), h(1.0 / (n + 1)) {
  if (n < 1) {
    throw std::invalid_argument("FemMesh1D: need at least one interior node");
  }
}

std::vector<double> FemMesh1D::nodes() const {
  std::vector<double> xs(static_cast<std::size_t>(n_interior));
  for (int i = 0; i < n_interior; ++i) {
    xs[static_cast<std::size_t>(i)] = (i + 1) * h;
  }
  return xs;
}

std::pair<Mat, Mat> assemble_fem(const FemMesh1D& mesh) {
  const int n = mesh.n_interior;
  const double h = mesh.h;
  Mat mass = Mat::Zero(n, n);
  Mat stiffness = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    mass(i, i) = 4.0 * h / 6.0;
    stiffness(i, i) = 2.0 / h;
    if (i + 1 < n) {
      mass(i, i + 1) = mass(i + 1, i) = h / 6.0;
      stiffness(i, i + 1) = stiffness(i + 1, i) = -1.0 / h;
    }
  }
  return {mass, stiffness};
}

Vec load_vec(const FemMesh1D& mesh, const std::function<double(double)>& f) {
  const int n = mesh.n_interior;
  const double h = mesh.h;
  Vec load = Vec::Zero(n);
  // Element e spans [e*h, (e+1)*h]; the hat of node e-1 falls across it and
  // the hat of node e rises, boundary hats excluded.
  for (int e = 0; e <= n; ++e) {
    const double a = e * h;
    const double b = (e + 1) * h;
    const double mid = 0.5 * (a + b);
    const double rad = 0.5 * (b - a);
    for (int q = 0; q < kQuadPoints; ++q) {
      const double x = mid + rad * kGaussNodes[q];
      const double w = rad * kGaussWeights[q];
      const double fx = f(x);
      if (e >= 1) load(e - 1) += w * fx * (b - x) / h;
      if (e <= n - 1) load(e) += w * fx * (x - a) / h;
    }
  }
  return load;
}

Mat WaveParams::default_u() {
  Vec d(3);
  d << 1.0, 1.0, 0.25;
  return d.asDiagonal();
}

Mat WaveParams::default_r() {
  Vec d(2);
  d << 0.3, 0.15;
  return d.asDiagonal();
}

void WaveParams::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("WaveParams: dt must be > 0");
  if (!(eps >= 0.0)) throw std::invalid_argument("WaveParams: eps must be >= 0");
  if (n_f < 1 || n_c < 1 || n_c > n_f) {
    throw std::invalid_argument("WaveParams: need 1 <= n_c <= n_f");
  }
  if ((n_f + 1) % (n_c + 1) != 0) {
    throw IncompatibleMeshes(
        "WaveParams: coarse nodes not a subset of fine nodes; "
        "(n_f+1) must be divisible by (n_c+1)");
  }
  if (u_cov.rows() != 3 || u_cov.cols() != 3) {
    throw std::invalid_argument("WaveParams: u_cov must be 3x3");
  }
  if (r_cov.rows() != 2 || r_cov.cols() != 2) {
    throw std::invalid_argument("WaveParams: r_cov must be 2x2");
  }
  if (burn_in < 0 || n_sims < 1 || n_eval < 1) {
    throw std::invalid_argument(
        "WaveParams: burn_in >= 0, n_sims >= 1, n_eval >= 1 required");
  }
  if (!(s0_scale >= 0.0)) {
    throw std::invalid_argument("WaveParams: s0_scale must be >= 0");
  }
}

WaveModel build_wave_model(const WaveParams& params) {
  params.validate();
  const FemMesh1D mesh(params.n_f);
  const auto [mass, stiffness] = assemble_fem(mesh);
  const int nf = params.n_f;
  const int n = 2 * nf;

  const Eigen::LLT<Mat> mass_llt(mass);
  if (mass_llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("build_wave_model: mass matrix not PD");
  }

  // First-order form on [position; velocity] coefficients.
  Mat a_cont = Mat::Zero(n, n);
  a_cont.block(0, nf, nf, nf) = Mat::Identity(nf, nf);
  a_cont.block(nf, 0, nf, nf) = -mass_llt.solve(stiffness);
  a_cont.block(nf, nf, nf, nf) = -params.eps * Mat::Identity(nf, nf);

  // Implicit Euler: (I - dt A_cont) x_k = x_{k-1} + B_load u_k.
  const Mat step = Mat::Identity(n, n) - params.dt * a_cont;
  const Eigen::PartialPivLU<Mat> step_lu(step);
  if (!(step_lu.rcond() > 1e-14)) {
    throw SingularStep("build_wave_model: implicit step matrix is singular");
  }
  const Mat a_d = step_lu.solve(Mat::Identity(n, n));

  const double pi = std::numbers::pi;
  const auto b1 = [pi](double x) { return (1.0 - x) * std::sin(pi * x); };
  const auto b2 = [](double x) { return 7.0 * x * x * (1.0 - x); };
  // sin(6 pi x)^2 / x has a removable singularity at 0 with limit 0; the
  // quadrature nodes never hit 0 but guard anyway.
  const auto b3 = [pi](double x) {
    if (x == 0.0) return 0.0;
    const double s = std::sin(6.0 * pi * x);
    return s * s / x;
  };
  const auto c1 = [](double x) { return 1.4 / std::pow(x + 1.0, 0.7); };
  const auto c2 = [](double x) { return 1.0 / std::pow(2.0 - x, 0.3); };

  // Loads act on the velocity equation through the mass inverse; the output
  // functionals pair with the position component in L2, which in
  // coefficients is just the load vector.
  Mat load_cols(nf, 3);
  load_cols.col(0) = load_vec(mesh, b1);
  load_cols.col(1) = load_vec(mesh, b2);
  load_cols.col(2) = load_vec(mesh, b3);
  Mat b_load = Mat::Zero(n, 3);
  b_load.block(nf, 0, nf, 3) = mass_llt.solve(load_cols);

  Mat c_coeff = Mat::Zero(2, n);
  c_coeff.row(0).head(nf) = load_vec(mesh, c1).transpose();
  c_coeff.row(1).head(nf) = load_vec(mesh, c2).transpose();

  const Mat b_use = params.load_in_resolvent ? Mat(a_d * b_load) : b_load;

  // Energy inner product blockdiag(stiffness, mass) -> orthonormal coords.
  Mat gram = Mat::Zero(n, n);
  gram.topLeftCorner(nf, nf) = stiffness;
  gram.bottomRightCorner(nf, nf) = mass;
  CoordinateMap fine_map(gram);

  LgssModel model;
  model.a = fine_map.map_operator(a_d);
  model.b = fine_map.map_input(b_use);
  model.c = fine_map.map_output(c_coeff);
  model.u_cov = params.dt * params.u_cov;
  model.r_cov = params.r_cov;
  model.mean0 = Vec::Zero(n);
  model.s0 = params.s0_scale * Mat::Identity(n, n);
  model.validate();

  // Smoothness Gram blockdiag(K M^-1 K, K), pushed to orthonormal
  // coordinates as a bilinear form: G1_on = T^-T G1 T^-1.
  Mat g1 = Mat::Zero(n, n);
  g1.topLeftCorner(nf, nf) =
      symmetrize(stiffness * mass_llt.solve(stiffness));
  g1.bottomRightCorner(nf, nf) = stiffness;
  const Mat& ti = fine_map.t_inv();
  Mat x1_gram = symmetrize(ti.transpose() * g1 * ti);

  return WaveModel{std::move(model), std::move(fine_map), std::move(x1_gram),
                   mesh};
}

Mat mesh_embedding(int n_f, int n_c) {
  if (n_f < 1 || n_c < 1 || n_c > n_f) {
    throw std::invalid_argument("mesh_embedding: need 1 <= n_c <= n_f");
  }
  if ((n_f + 1) % (n_c + 1) != 0) {
    throw IncompatibleMeshes(
        "mesh_embedding: (n_f+1) must be divisible by (n_c+1)");
  }
  const double hf = 1.0 / (n_f + 1);
  const double hc = 1.0 / (n_c + 1);
  Mat e0 = Mat::Zero(n_f, n_c);
  for (int j = 0; j < n_c; ++j) {
    const double xj = (j + 1) * hc;
    for (int i = 0; i < n_f; ++i) {
      const double xi = (i + 1) * hf;
      e0(i, j) = std::max(0.0, 1.0 - std::abs(xi - xj) / hc);
    }
  }
  Mat e = Mat::Zero(2 * n_f, 2 * n_c);
  e.topLeftCorner(n_f, n_c) = e0;
  e.bottomRightCorner(n_f, n_c) = e0;
  return e;
}

ProjectionPair build_mesh_projection(int n_f, int n_c,
                                     const CoordinateMap& fine_map) {
  if (fine_map.dim() != 2 * n_f) {
    throw std::invalid_argument(
        "build_mesh_projection: fine_map dimension must be 2*n_f");
  }
  return orthogonal_projection(mesh_embedding(n_f, n_c), fine_map);
}

} // namespace rokf
