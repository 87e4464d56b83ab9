// Micro-benchmarks for the hot paths: FEM assembly, model construction,
// covariance recursions, stationary solves and trajectory simulation at the
// size of the damped-wave benchmark (n_f = 65, state dimension 130).

#include <benchmark/benchmark.h>

#include <cmath>

#include "rokf/filters.hpp"
#include "rokf/psd.hpp"
#include "rokf/riccati.hpp"
#include "rokf/wave.hpp"

namespace {

using rokf::Mat;

const rokf::WaveModel& wave_fixture() {
  static const rokf::WaveModel wm = rokf::build_wave_model(rokf::WaveParams{});
  return wm;
}

const rokf::ProjectionPair& projection_fixture() {
  static const rokf::ProjectionPair proj =
      rokf::build_mesh_projection(65, 5, wave_fixture().fine_map);
  return proj;
}

void BM_AssembleFem(benchmark::State& state) {
  rokf::FemMesh1D mesh(static_cast<Eigen::Index>(state.range(0)));
  for (auto _ : state) {
    auto matrices = rokf::assemble_fem(mesh);
    benchmark::DoNotOptimize(matrices.first);
    benchmark::DoNotOptimize(matrices.second);
  }
}
BENCHMARK(BM_AssembleFem)->Arg(65)->Arg(513);

void BM_LoadVector(benchmark::State& state) {
  rokf::FemMesh1D mesh(static_cast<Eigen::Index>(state.range(0)));
  auto f = [](double x) { return std::sin(6.0 * M_PI * x) / (x + 0.1); };
  for (auto _ : state) {
    benchmark::DoNotOptimize(rokf::load_vec(mesh, f));
  }
}
BENCHMARK(BM_LoadVector)->Arg(65)->Arg(513);

void BM_BuildWaveModel(benchmark::State& state) {
  rokf::WaveParams params;
  params.n_f = static_cast<Eigen::Index>(state.range(0));
  params.n_c = 2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rokf::build_wave_model(params));
  }
}
BENCHMARK(BM_BuildWaveModel)->Arg(17)->Arg(65);

void BM_RdeStep(benchmark::State& state) {
  const auto& wm = wave_fixture();
  const Mat w = rokf::symmetrize(wm.model.b * wm.model.u_cov *
                                 wm.model.b.transpose());
  rokf::RdeState rde;
  rde.p = wm.model.s0 + Mat::Identity(130, 130);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rokf::rde_step(rde, wm.model.a, w, wm.model.c, wm.model.r_cov));
  }
}
BENCHMARK(BM_RdeStep);

void BM_ReducedOfflineStep(benchmark::State& state) {
  const auto& wm = wave_fixture();
  const auto& proj = projection_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rokf::reduced_offline(wm.model, proj, 1));
  }
}
BENCHMARK(BM_ReducedOfflineStep);

void BM_Simulate(benchmark::State& state) {
  const auto& wm = wave_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rokf::simulate(wm.model, static_cast<int>(state.range(0)), 1));
  }
}
BENCHMARK(BM_Simulate)->Arg(100)->Arg(1000);

void BM_DareSolveSmallWave(benchmark::State& state) {
  rokf::WaveParams params;
  params.n_f = 9;
  params.n_c = 4;
  rokf::WaveModel wm = rokf::build_wave_model(params);
  const Mat w = rokf::symmetrize(wm.model.b * wm.model.u_cov *
                                 wm.model.b.transpose());
  const Mat p0 = Mat::Zero(18, 18);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rokf::dare_solve(wm.model.a, w, wm.model.c, wm.model.r_cov, p0));
  }
}
BENCHMARK(BM_DareSolveSmallWave);

void BM_OperatorNorm(benchmark::State& state) {
  const auto& wm = wave_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rokf::op_norm(wm.model.a));
  }
}
BENCHMARK(BM_OperatorNorm);

}  // namespace

BENCHMARK_MAIN();
