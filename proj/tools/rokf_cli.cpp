// Command-line front end: wires run configs to the library and writes CSV
// tables plus self-describing JSON summaries. Every command is deterministic
// given (config, seed); reruns produce byte-identical files. Exit codes:
// 0 success, 2 configuration problem, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rokf/error_bounds.hpp"
#include "rokf/errors.hpp"
#include "rokf/filters.hpp"
#include "rokf/io.hpp"
#include "rokf/lgss.hpp"
#include "rokf/psd.hpp"
#include "rokf/riccati.hpp"
#include "rokf/wave.hpp"
#include "rokf/wave_bench.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace rokf;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  std::vector<std::string> tol_overrides;
};

RunConfig resolve_config(const CliOptions& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_run_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  if (opts.out_dir) cfg.output_dir = *opts.out_dir;
  for (const std::string& kv : opts.tol_overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("config: --tol expects NAME=VALUE, got '" +
                                  kv + "'");
    }
    std::string name = kv.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::invalid_argument("config: --tol " + name +
                                  ": value is not a number");
    }
    if (!(value > 0.0)) {
      throw std::invalid_argument("config: --tol " + name +
                                  ": tolerance must be positive");
    }
    cfg.tolerances[name] = value;
  }
  return cfg;
}

double tol_of(const RunConfig& cfg, const std::string& name, double fallback) {
  auto it = cfg.tolerances.find(name);
  return it == cfg.tolerances.end() ? fallback : it->second;
}

std::string out_path(const RunConfig& cfg, const std::string& filename) {
  std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  return (dir / filename).string();
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Inputs echoed into every summary so artifacts are self-contained. Execution
// plumbing (jobs, output_dir) is deliberately excluded: results do not depend
// on it, and echoing it would make byte-identity depend on the machine.
json inputs_json(const RunConfig& cfg) {
  json in;
  in["model_source"] = cfg.model_source == RunConfig::ModelSource::wave_builtin
                           ? "wave_builtin"
                           : "json_path";
  if (cfg.model_source == RunConfig::ModelSource::json_path) {
    in["model_path"] = cfg.model_path;
  }
  json wave;
  wave["dt"] = cfg.params.dt;
  wave["eps"] = cfg.params.eps;
  wave["u_cov"] = matrix_json(cfg.params.u_cov);
  wave["r_cov"] = matrix_json(cfg.params.r_cov);
  wave["n_f"] = cfg.params.n_f;
  wave["n_c"] = cfg.params.n_c;
  wave["burn_in"] = cfg.params.burn_in;
  wave["n_sims"] = cfg.params.n_sims;
  wave["n_eval"] = cfg.params.n_eval;
  wave["s0_scale"] = cfg.params.s0_scale;
  wave["load_in_resolvent"] = cfg.params.load_in_resolvent;
  if (cfg.model_source == RunConfig::ModelSource::wave_builtin) {
    in["wave"] = std::move(wave);
  }
  in["sweep_sizes"] = cfg.sweep_sizes;
  in["offline_horizon"] = cfg.offline_horizon;
  in["seed"] = cfg.seed;
  json tols = json::object();
  for (const auto& [name, value] : cfg.tolerances) tols[name] = value;
  in["tolerances"] = std::move(tols);
  return in;
}

void write_json(const RunConfig& cfg, const std::string& filename,
                const json& doc) {
  write_text_file(out_path(cfg, filename), doc.dump(2) + "\n");
}

// The state and its projection apparatus for one run. JSON-file models get
// the identity projection (no coarse structure is encoded in the model
// schema); the wave builtin carries its mesh projection and smoothness Gram.
struct ResolvedModel {
  LgssModel model;
  ProjectionPair projection;
  Mat x1_gram;
  bool is_wave = false;
  int n_f = 0;  // position/velocity split size when is_wave
};

ResolvedModel resolve_model(const RunConfig& cfg) {
  ResolvedModel rm;
  if (cfg.model_source == RunConfig::ModelSource::wave_builtin) {
    WaveModel wm = build_wave_model(cfg.params);
    rm.model = wm.model;
    rm.projection =
        build_mesh_projection(cfg.params.n_f, cfg.params.n_c, wm.fine_map);
    rm.x1_gram = wm.x1_gram;
    rm.is_wave = true;
    rm.n_f = cfg.params.n_f;
  } else {
    rm.model = model_from_json_text(read_text_file(cfg.model_path));
    rm.projection = ProjectionPair::identity(rm.model.dim());
    rm.x1_gram = Mat::Identity(rm.model.dim(), rm.model.dim());
  }
  return rm;
}

void require_wave(const RunConfig& cfg, const std::string& command) {
  if (cfg.model_source != RunConfig::ModelSource::wave_builtin) {
    throw std::invalid_argument("config: command '" + command +
                                "' requires model_source = wave_builtin");
  }
}

json bench_row_json(const BenchResult& row) {
  json r;
  r["method"] = to_string(row.method);
  r["mean_sq_err_position"] = row.mean_sq_err_position;
  r["mean_sq_err_velocity"] = row.mean_sq_err_velocity;
  r["n_sims"] = row.n_sims;
  r["seed"] = row.seed;
  return r;
}

// ---------------------------------------------------------------------------

int cmd_offline(const RunConfig& cfg) {
  ResolvedModel rm = resolve_model(cfg);
  const int horizon = cfg.offline_horizon;
  const double dare_tol = tol_of(cfg, "dare", 1e-10);

  FullKfSchedule full = full_kf_offline(rm.model, horizon,
                                        RetentionPolicy::stepping_only(horizon));
  ReducedGainSchedule red = reduced_offline(
      rm.model, rm.projection, horizon, RetentionPolicy::stepping_only(horizon));

  CsvWriter csv({"step", "tr_p_full", "gain_norm_full", "tr_p_reduced",
                 "tr_traj_cov", "gain_norm_reduced"});
  for (int k = 0; k <= horizon; ++k) {
    csv.add_numeric_row({static_cast<double>(k), full.tr_cov[k],
                         k == 0 ? 0.0 : full.gain_norm[k - 1],
                         red.tr_err_cov[k], red.tr_s[k],
                         k == 0 ? 0.0 : red.gain_norm[k - 1]});
  }
  csv.write(out_path(cfg, "offline_traces.csv"));

  // Stationarity diagnostics: drift of the traces and gain norms over the
  // last `window` steps, plus the full-filter fixed point for cross-check.
  const int window = std::min(100, horizon);
  auto drift = [&](const std::vector<double>& v) {
    std::size_t w = static_cast<std::size_t>(window);
    std::size_t start = v.size() > w + 1 ? v.size() - 1 - w : 0;
    double lo = v.back(), hi = v.back();
    for (std::size_t i = start; i < v.size(); ++i) {
      lo = std::min(lo, v[i]);
      hi = std::max(hi, v[i]);
    }
    return hi - lo;
  };
  DareSolution dare = dare_solve(
      rm.model.a,
      symmetrize(rm.model.b * rm.model.u_cov * rm.model.b.transpose()),
      rm.model.c, rm.model.r_cov, Mat::Zero(rm.model.dim(), rm.model.dim()),
      dare_tol);

  json doc;
  doc["schema"] = "rokf-offline-v1";
  doc["inputs"] = inputs_json(cfg);
  doc["horizon"] = horizon;
  json fin;
  fin["tr_p_full"] = full.tr_cov.back();
  fin["tr_p_reduced"] = red.tr_err_cov.back();
  fin["tr_traj_cov"] = red.tr_s.back();
  fin["gain_norm_full"] = full.gain_norm.back();
  fin["gain_norm_reduced"] = red.gain_norm.back();
  doc["final"] = std::move(fin);
  json tail;
  tail["window"] = window;
  tail["tr_p_full_drift"] = drift(full.tr_cov);
  tail["tr_p_reduced_drift"] = drift(red.tr_err_cov);
  tail["gain_norm_full_drift"] = drift(full.gain_norm);
  tail["gain_norm_reduced_drift"] = drift(red.gain_norm);
  doc["tail_stability"] = std::move(tail);
  json dj;
  dj["tr_p"] = trace(dare.p);
  dj["residual"] = dare.residual;
  dj["iterations"] = dare.iterations;
  doc["dare_fixed_point"] = std::move(dj);
  write_json(cfg, "offline_summary.json", doc);
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  ResolvedModel rm = resolve_model(cfg);
  const int horizon = cfg.offline_horizon;
  Trajectory traj = simulate(rm.model, horizon, cfg.seed);

  std::vector<std::string> header{"step"};
  for (Eigen::Index j = 0; j < rm.model.n_out(); ++j) {
    header.push_back("y" + std::to_string(j + 1));
  }
  header.push_back("state_norm_sq");
  CsvWriter csv(header);
  for (int k = 1; k <= horizon; ++k) {
    std::vector<double> row{static_cast<double>(k)};
    for (Eigen::Index j = 0; j < rm.model.n_out(); ++j) {
      row.push_back(traj.outputs(j, k - 1));
    }
    row.push_back(traj.states.col(k).squaredNorm());
    csv.add_numeric_row(row);
  }
  csv.write(out_path(cfg, "trajectory.csv"));

  double mean_out_sq = 0.0;
  for (int k = 0; k < horizon; ++k) mean_out_sq += traj.outputs.col(k).squaredNorm();
  mean_out_sq /= horizon;
  double mean_state_sq = 0.0;
  for (int k = 1; k <= horizon; ++k) mean_state_sq += traj.states.col(k).squaredNorm();
  mean_state_sq /= horizon;

  json doc;
  doc["schema"] = "rokf-simulate-v1";
  doc["inputs"] = inputs_json(cfg);
  doc["horizon"] = horizon;
  doc["mean_output_norm_sq"] = mean_out_sq;
  doc["mean_state_norm_sq"] = mean_state_sq;
  write_json(cfg, "simulate_summary.json", doc);
  return 0;
}

int cmd_table1(const RunConfig& cfg) {
  require_wave(cfg, "table1");
  std::vector<BenchResult> rows = run_table1(cfg.params, cfg.seed, cfg.jobs);

  CsvWriter csv({"method", "mean_sq_err_position", "mean_sq_err_velocity",
                 "n_sims", "seed"});
  for (const BenchResult& row : rows) {
    csv.add_row({to_string(row.method), format_number(row.mean_sq_err_position),
                 format_number(row.mean_sq_err_velocity),
                 std::to_string(row.n_sims), std::to_string(row.seed)});
  }
  csv.write(out_path(cfg, "table1.csv"));

  // Closed-loop spectral radii at these parameters: the full filter's map
  // A - K C A and the coarse map the reduced filter actually iterates.
  WaveModel wm = build_wave_model(cfg.params);
  ProjectionPair proj =
      build_mesh_projection(cfg.params.n_f, cfg.params.n_c, wm.fine_map);
  const LgssModel& m = wm.model;
  const double dare_tol = tol_of(cfg, "dare", 1e-10);
  DareSolution dare = dare_solve(
      m.a, symmetrize(m.b * m.u_cov * m.b.transpose()), m.c, m.r_cov,
      Mat::Zero(m.dim(), m.dim()), dare_tol);
  StationaryReduced red =
      reduced_stationary(m, proj, tol_of(cfg, "stationary", 1e-10));
  Mat closed_full = m.a - dare.gain * m.c * m.a;
  Mat closed_coarse =
      proj.pi * (m.a - red.gain * m.c * m.a) * red.lift;

  json doc;
  doc["schema"] = "rokf-table1-v1";
  doc["inputs"] = inputs_json(cfg);
  json jrows = json::array();
  for (const BenchResult& row : rows) jrows.push_back(bench_row_json(row));
  doc["rows"] = std::move(jrows);
  json radii;
  radii["full_closed_loop"] = spectral_radius(closed_full);
  radii["reduced_closed_loop"] = spectral_radius(closed_coarse);
  doc["spectral_radius"] = std::move(radii);
  write_json(cfg, "table1_summary.json", doc);
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  require_wave(cfg, "sweep");
  ConvergenceStudy study =
      convergence_study(cfg.params, cfg.sweep_sizes, cfg.seed, cfg.jobs);

  CsvWriter csv({"n_c", "h_c", "nu", "discrepancy", "direct_trace_difference"});
  for (const SweepPoint& p : study.points) {
    csv.add_numeric_row({static_cast<double>(p.n_c), p.h_c, p.nu,
                         p.discrepancy, p.direct_trace_difference});
  }
  csv.write(out_path(cfg, "sweep.csv"));

  json doc;
  doc["schema"] = "rokf-sweep-v1";
  doc["inputs"] = inputs_json(cfg);
  json pts = json::array();
  for (const SweepPoint& p : study.points) {
    json pj;
    pj["n_c"] = p.n_c;
    pj["h_c"] = p.h_c;
    pj["nu"] = p.nu;
    pj["discrepancy"] = p.discrepancy;
    pj["direct_trace_difference"] = p.direct_trace_difference;
    pts.push_back(std::move(pj));
  }
  doc["points"] = std::move(pts);
  json reg;
  reg["model"] = "discrepancy ~ coefficient * h_c^exponent";
  reg["coefficient"] = study.coefficient;
  reg["exponent"] = study.exponent;
  doc["regression"] = std::move(reg);
  write_json(cfg, "sweep_summary.json", doc);
  return 0;
}

json bound_report_json(const BoundReport& rep) {
  json b;
  b["applicable"] = true;
  b["total_bound"] = rep.total_bound;
  b["leading_term"] = rep.leading_term;
  b["higher_term"] = rep.higher_term;
  b["nu"] = rep.nu;
  b["tr_dp_bound"] = rep.denominator_ok
                         ? json(rep.tr_dp_bound)
                         : json("infinite (denominator not positive)");
  b["denominator_ok"] = rep.denominator_ok;
  b["closed_loop_radius"] = rep.closed_loop_radius;
  b["stable"] = rep.stable;
  json consts;
  consts["l0"] = rep.constants.l0;
  consts["tr_m"] = rep.constants.tr_m;
  consts["c_hat1"] = rep.constants.c_hat1;
  consts["c_hat2"] = rep.constants.c_hat2;
  consts["a"] = rep.constants.a;
  consts["b"] = rep.constants.b;
  consts["c1"] = rep.constants.c1;
  consts["c2"] = rep.constants.c2;
  consts["c3"] = rep.constants.c3;
  consts["c4"] = rep.constants.c4;
  json norms = json::object();
  for (const auto& [name, value] : rep.constants.norms) norms[name] = value;
  consts["norms"] = std::move(norms);
  b["constants"] = std::move(consts);
  return b;
}

json not_applicable(const std::string& reason) {
  json b;
  b["applicable"] = false;
  b["reason"] = reason;
  return b;
}

int cmd_bounds(const RunConfig& cfg) {
  ResolvedModel rm = resolve_model(cfg);
  const LgssModel& m = rm.model;
  const double tol = tol_of(cfg, "dare", 1e-10);
  bool all_applicable = true;

  json doc;
  doc["schema"] = "rokf-bounds-v1";
  doc["inputs"] = inputs_json(cfg);

  try {
    doc["a_priori"] = bound_report_json(
        a_priori_bound(m, rm.projection, rm.x1_gram, tol));
  } catch (const AssumptionFailed& e) {
    doc["a_priori"] = not_applicable(e.what());
    all_applicable = false;
  }

  // The a-posteriori route needs converged reduced-filter operators; if the
  // recursion cannot converge (unstable model), both bounds are reported as
  // not applicable rather than failing the run.
  bool have_stationary = false;
  StationaryReduced red;
  Mat m_inf;
  std::string stationary_failure;
  try {
    red = reduced_stationary(m, rm.projection, tol_of(cfg, "stationary", 1e-10));
    m_inf = stationary_load_term(m, rm.projection, red);
    have_stationary = true;
  } catch (const NumericError& e) {
    stationary_failure = e.what();
  }
  if (have_stationary) {
    try {
      doc["a_posteriori"] = bound_report_json(a_posteriori_bound(
          m, rm.projection, red.gain, red.lift, m_inf, rm.x1_gram, tol));
    } catch (const AssumptionFailed& e) {
      doc["a_posteriori"] = not_applicable(e.what());
      all_applicable = false;
    }
    try {
      doc["remark_relaxation"] = bound_report_json(remark43_bound(
          m, rm.projection, red.gain, red.lift, m_inf, rm.x1_gram, tol));
    } catch (const AssumptionFailed& e) {
      doc["remark_relaxation"] = not_applicable(e.what());
      all_applicable = false;
    }
    doc["load_term_trace"] = trace(m_inf);
  } else {
    doc["a_posteriori"] = not_applicable(stationary_failure);
    doc["remark_relaxation"] = not_applicable(stationary_failure);
    all_applicable = false;
  }

  // Exact perturbation quantities under the uniform dominator
  // M = (I - Pi_s) S_inf (I - Pi_s)^*: what the trace-route bound is to be
  // compared against.
  try {
    if (spectral_radius(m.a) >= 1.0) {
      throw AssumptionFailed(
          "state map spectral radius >= 1: stationary dominator undefined");
    }
    Mat s_inf = lyapunov_solve(
        m.a, symmetrize(m.b * m.u_cov * m.b.transpose()), tol);
    Mat compl_mat = Mat::Identity(m.dim(), m.dim()) - rm.projection.pi_state();
    Mat m_dom = symmetrize(compl_mat * s_inf * compl_mat.transpose());
    DeltaPDecomposition dp = delta_p_exact(m, m_dom, tol);
    Mat dk = delta_k_exact(m, m_dom, dp.dare_f, tol);
    json ex;
    ex["applicable"] = true;
    ex["tr_m_dominator"] = trace(m_dom);
    ex["tr_delta_p_exact"] = trace(dp.delta_p);
    ex["delta_k_exact_hs"] = hs_norm(dk);
    ex["fixed_point_residual_nominal"] = dp.residual_nominal;
    ex["fixed_point_residual_perturbed"] = dp.residual_perturbed;
    doc["exact_perturbation"] = std::move(ex);
  } catch (const NumericError& e) {
    doc["exact_perturbation"] = not_applicable(e.what());
    all_applicable = false;
  }

  doc["all_assumptions_hold"] = all_applicable;
  write_json(cfg, "bounds_summary.json", doc);
  return 0;
}

int cmd_stationary(const RunConfig& cfg) {
  require_wave(cfg, "stationary");
  BenchResult row = run_stationary_approx(cfg.params, cfg.seed, cfg.jobs);

  CsvWriter csv({"method", "mean_sq_err_position", "mean_sq_err_velocity",
                 "n_sims", "seed"});
  csv.add_row({to_string(row.method), format_number(row.mean_sq_err_position),
               format_number(row.mean_sq_err_velocity),
               std::to_string(row.n_sims), std::to_string(row.seed)});
  csv.write(out_path(cfg, "stationary.csv"));

  // Deterministic cross-check: the exact stationary error covariance of this
  // (suboptimal, time-invariant) filter, split into position/velocity blocks.
  WaveModel wm = build_wave_model(cfg.params);
  ProjectionPair proj =
      build_mesh_projection(cfg.params.n_f, cfg.params.n_c, wm.fine_map);
  ApproxStationaryFilter filt = approx_stationary_filter(wm.model, proj);
  Mat err = filter_error_covariance(wm.model, filt.a_s, filt.c_s, filt.gain,
                                    filt.q_hat);
  const int nf = cfg.params.n_f;
  Mat closed_s = filt.a_s - filt.gain * filt.c_s * filt.a_s;

  json doc;
  doc["schema"] = "rokf-stationary-v1";
  doc["inputs"] = inputs_json(cfg);
  doc["monte_carlo"] = bench_row_json(row);
  json det;
  det["tr_err_position"] = err.topLeftCorner(nf, nf).trace();
  det["tr_err_velocity"] = err.bottomRightCorner(nf, nf).trace();
  det["closed_loop_radius"] = spectral_radius(closed_s);
  det["dare_iterations"] = filt.dare_iterations;
  doc["stationary_filter"] = std::move(det);
  write_json(cfg, "stationary_summary.json", doc);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order one-step Kalman filtering toolkit"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string command;
  for (const auto& [name, help] :
       std::initializer_list<std::pair<const char*, const char*>>{
           {"offline", "Compute full + reduced gain schedules; write per-step "
                       "trace CSV and convergence diagnostics"},
           {"simulate", "Simulate one trajectory; write outputs CSV"},
           {"table1", "Monte Carlo error table for the full, reduced and "
                      "naive-coarse filters on the wave benchmark"},
           {"sweep", "Deterministic mesh-refinement sweep of the stationary "
                     "discrepancy, with log-log regression"},
           {"bounds", "A-priori / a-posteriori / relaxed error bounds and "
                      "exact perturbation quantities"},
           {"stationary", "Stationary approximate reduced filter: Monte Carlo "
                          "errors and exact error covariance"}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&command, name = std::string(name)]() { command = name; });
  }

  app.add_option("--config", opts.config_path,
                 "JSON run configuration (defaults used when omitted)");
  app.add_option("--seed", opts.seed, "Override the config's base seed");
  app.add_option("--jobs", opts.jobs,
                 "Monte Carlo worker threads (<= 0: machine parallelism)");
  app.add_option("--out", opts.out_dir, "Output directory for all artifacts");
  app.add_option("--tol", opts.tol_overrides,
                 "Tolerance override NAME=VALUE (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg = resolve_config(opts);
    if (command == "offline") return cmd_offline(cfg);
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "table1") return cmd_table1(cfg);
    if (command == "sweep") return cmd_sweep(cfg);
    if (command == "bounds") return cmd_bounds(cfg);
    if (command == "stationary") return cmd_stationary(cfg);
    std::cerr << "config error: unknown command\n";
    return 2;
  } catch (const IncompatibleMeshes& e) {
    // Mesh mismatches always originate from configured sizes.
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
