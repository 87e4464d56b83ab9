#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "rokf/coordinate_map.hpp"
#include "rokf/lgss.hpp"
#include "rokf/matrix.hpp"
#include "rokf/projection.hpp"

namespace rokf {

/// Equispaced piecewise-linear mesh on [0,1] with homogeneous Dirichlet
/// ends; only interior nodes carry degrees of freedom.
struct FemMesh1D {
  int n_interior = 0;
  double h = 0.0;

  FemMesh1D() = default;
  explicit FemMesh1D(int n);

  /// Interior node positions (i+1)h, i = 0..n_interior-1.
  std::vector<double> nodes() const;
};

/// Galerkin matrices of the hat basis with Dirichlet rows/columns
/// eliminated: mass = (h/6) tridiag(1,4,1), stiffness = (1/h) tridiag(-1,2,-1).
std::pair<Mat, Mat> assemble_fem(const FemMesh1D& mesh);

/// L2 load vector <f, phi_i> against all interior hats, integrated with
/// 10-point Gauss-Legendre quadrature per element.
Vec load_vec(const FemMesh1D& mesh, const std::function<double(double)>& f);

/// Parameters of the damped-wave benchmark
///   d2z/dt2 = -eps dz/dt + d2z/dx2 + sum_j b_j(x) u_j(t),
/// observed through two L2 output functionals, discretized in space by the
/// FEM mesh above and in time by one implicit-Euler step of length dt.
struct WaveParams {
  double dt = 0.01;   // time step
  double eps = 0.4;   // damping coefficient
  Mat u_cov = default_u();  // 3x3 input covariance U; the model gets dt*U
  Mat r_cov = default_r();  // 2x2 measurement covariance
  int n_f = 65;  // fine-mesh interior nodes
  int n_c = 5;   // coarse-mesh interior nodes; (n_f+1) % (n_c+1) == 0
  int burn_in = 2000;  // Monte Carlo steps discarded before error averaging
  int n_sims = 500;    // Monte Carlo trajectories
  int n_eval = 500;    // steps averaged per trajectory after burn-in
  double s0_scale = 0.0;  // initial covariance s0_scale*I (orthonormal coords)
  // Where the stochastic load enters the implicit step: false applies the
  // load vector directly to the new state, true pushes it through the same
  // resolvent as the previous state (B = A_d B_load). The two differ by
  // O(dt) in the effective input map.
  bool load_in_resolvent = false;

  static Mat default_u();
  static Mat default_r();

  /// Throws std::invalid_argument / IncompatibleMeshes on bad values.
  void validate() const;
};

/// The assembled benchmark system, returned in coordinates where the energy
/// inner product blockdiag(stiffness, mass) is Euclidean. The first
/// n_interior coordinates carry the position (stiffness-weighted) component,
/// the last n_interior the velocity (mass-weighted) component.
struct WaveModel {
  LgssModel model;        // orthonormal energy coordinates
  CoordinateMap fine_map; // FEM coefficients <-> orthonormal coordinates
  Mat x1_gram;  // smoothness Gram blockdiag(K M^-1 K, K), orthonormal coords
  FemMesh1D mesh;
};

WaveModel build_wave_model(const WaveParams& params);

/// Coarse hat functions written exactly in the fine hat basis (piecewise
/// linear interpolation weights), applied blockwise to [position; velocity].
/// Throws IncompatibleMeshes unless (n_f+1) % (n_c+1) == 0.
Mat mesh_embedding(int n_f, int n_c);

/// Orthogonal projection onto the embedded coarse space in the energy inner
/// product carried by fine_map.
ProjectionPair build_mesh_projection(int n_f, int n_c,
                                     const CoordinateMap& fine_map);

} // namespace rokf
