#include "rokf/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rokf {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void config_error(const std::string& message) {
  throw std::invalid_argument("config: " + message);
}

void reject_unknown_keys(const ordered_json& object,
                         const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& item : object.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      config_error("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

ordered_json matrix_to_json(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_to_json(const Vec& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Mat matrix_from_json(const ordered_json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    config_error("field \"" + name + "\" must be a non-empty array of rows");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const ordered_json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      config_error("field \"" + name + "\" has ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const ordered_json& cell = row[static_cast<size_t>(k)];
      if (!cell.is_number()) {
        config_error("field \"" + name + "\" has a non-numeric entry");
      }
      m(i, k) = cell.get<double>();
    }
  }
  return m;
}

Vec vector_from_json(const ordered_json& j, const std::string& name) {
  if (!j.is_array()) config_error("field \"" + name + "\" must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const ordered_json& cell = j[static_cast<size_t>(i)];
    if (!cell.is_number()) {
      config_error("field \"" + name + "\" has a non-numeric entry");
    }
    v(i) = cell.get<double>();
  }
  return v;
}

ordered_json parse_or_diagnose(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    config_error(std::string("JSON parse failure: ") + e.what());
  }
}

double get_number(const ordered_json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_error(std::string(key) + " must be a number");
  return j[key].get<double>();
}

int get_int(const ordered_json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    config_error(std::string(key) + " must be an integer");
  }
  return j[key].get<int>();
}

bool get_bool(const ordered_json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) config_error(std::string(key) + " must be a bool");
  return j[key].get<bool>();
}

} // namespace

std::string format_number(double v) {
  char buf[40];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v,
                                    std::chars_format::general, 12);
  return std::string(buf, result.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {
  if (header_.empty()) {
    throw std::invalid_argument("CsvWriter: header must not be empty");
  }
}

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw std::invalid_argument("CsvWriter: row width does not match header");
  }
  rows_.push_back(std::move(cells));
}

void CsvWriter::add_numeric_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  add_row(std::move(cells));
}

std::string CsvWriter::str() const {
  std::ostringstream out;
  for (size_t i = 0; i < header_.size(); ++i) {
    if (i) out << ',';
    out << header_[i];
  }
  out << '\n';
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  return out.str();
}

void CsvWriter::write(const std::string& path) const {
  write_text_file(path, str());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string model_to_json_text(const LgssModel& model) {
  ordered_json j;
  j["schema"] = "rokf-model-v1";
  j["a"] = matrix_to_json(model.a);
  j["b"] = matrix_to_json(model.b);
  j["c"] = matrix_to_json(model.c);
  j["u_cov"] = matrix_to_json(model.u_cov);
  j["r_cov"] = matrix_to_json(model.r_cov);
  j["mean0"] = vector_to_json(model.mean0);
  j["s0"] = matrix_to_json(model.s0);
  return j.dump(2) + "\n";
}

LgssModel model_from_json_text(const std::string& text) {
  const ordered_json j = parse_or_diagnose(text);
  if (!j.is_object()) config_error("model document must be a JSON object");
  reject_unknown_keys(
      j, {"schema", "a", "b", "c", "u_cov", "r_cov", "mean0", "s0"}, "model");
  for (const char* key : {"a", "b", "c", "u_cov", "r_cov", "mean0", "s0"}) {
    if (!j.contains(key)) {
      config_error(std::string("model is missing field \"") + key + "\"");
    }
  }
  LgssModel model;
  model.a = matrix_from_json(j["a"], "a");
  model.b = matrix_from_json(j["b"], "b");
  model.c = matrix_from_json(j["c"], "c");
  model.u_cov = matrix_from_json(j["u_cov"], "u_cov");
  model.r_cov = matrix_from_json(j["r_cov"], "r_cov");
  model.mean0 = vector_from_json(j["mean0"], "mean0");
  model.s0 = matrix_from_json(j["s0"], "s0");
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    config_error(std::string("model is inconsistent: ") + e.what());
  }
  return model;
}

RunConfig run_config_from_json_text(const std::string& text) {
  const ordered_json j = parse_or_diagnose(text);
  if (!j.is_object()) config_error("config document must be a JSON object");
  reject_unknown_keys(j,
                      {"model_source", "model_path", "wave", "sweep_sizes",
                       "offline_horizon", "seed", "jobs", "output_dir",
                       "tolerances"},
                      "config");

  RunConfig config;
  if (j.contains("model_source")) {
    const std::string source = j["model_source"].is_string()
                                   ? j["model_source"].get<std::string>()
                                   : std::string();
    if (source == "wave_builtin") {
      config.model_source = RunConfig::ModelSource::wave_builtin;
    } else if (source == "json_path") {
      config.model_source = RunConfig::ModelSource::json_path;
    } else {
      config_error("model_source must be \"wave_builtin\" or \"json_path\"");
    }
  }
  if (j.contains("model_path")) {
    if (!j["model_path"].is_string()) config_error("model_path must be a string");
    config.model_path = j["model_path"].get<std::string>();
  }
  if (config.model_source == RunConfig::ModelSource::json_path &&
      config.model_path.empty()) {
    config_error("model_source json_path requires model_path");
  }

  if (j.contains("wave")) {
    const ordered_json& w = j["wave"];
    if (!w.is_object()) config_error("wave must be an object");
    reject_unknown_keys(w,
                        {"dt", "eps", "u_cov", "r_cov", "n_f", "n_c",
                         "burn_in", "n_sims", "n_eval", "s0_scale",
                         "load_in_resolvent"},
                        "wave");
    WaveParams& p = config.params;
    p.dt = get_number(w, "dt", p.dt);
    p.eps = get_number(w, "eps", p.eps);
    if (w.contains("u_cov")) p.u_cov = matrix_from_json(w["u_cov"], "u_cov");
    if (w.contains("r_cov")) p.r_cov = matrix_from_json(w["r_cov"], "r_cov");
    p.n_f = get_int(w, "n_f", p.n_f);
    p.n_c = get_int(w, "n_c", p.n_c);
    p.burn_in = get_int(w, "burn_in", p.burn_in);
    p.n_sims = get_int(w, "n_sims", p.n_sims);
    p.n_eval = get_int(w, "n_eval", p.n_eval);
    p.s0_scale = get_number(w, "s0_scale", p.s0_scale);
    p.load_in_resolvent =
        get_bool(w, "load_in_resolvent", p.load_in_resolvent);
  }

  if (j.contains("sweep_sizes")) {
    if (!j["sweep_sizes"].is_array()) config_error("sweep_sizes must be an array");
    config.sweep_sizes.clear();
    for (const auto& item : j["sweep_sizes"]) {
      if (!item.is_number_integer()) {
        config_error("sweep_sizes entries must be integers");
      }
      config.sweep_sizes.push_back(item.get<int>());
    }
    if (config.sweep_sizes.size() < 2) {
      config_error("sweep_sizes needs at least two entries");
    }
  }

  config.offline_horizon = get_int(j, "offline_horizon", config.offline_horizon);
  if (config.offline_horizon < 1) config_error("offline_horizon must be >= 1");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0) {
      config_error("seed must be a non-negative integer");
    }
    config.seed = j["seed"].get<std::uint64_t>();
  }
  config.jobs = get_int(j, "jobs", config.jobs);
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) config_error("output_dir must be a string");
    config.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("tolerances")) {
    if (!j["tolerances"].is_object()) config_error("tolerances must be an object");
    for (const auto& item : j["tolerances"].items()) {
      if (!item.value().is_number() || !(item.value().get<double>() > 0.0)) {
        config_error("tolerance \"" + item.key() + "\" must be positive");
      }
      config.tolerances[item.key()] = item.value().get<double>();
    }
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_json_text(read_text_file(path));
}

} // namespace rokf
