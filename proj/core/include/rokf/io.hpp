#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rokf/lgss.hpp"
#include "rokf/wave.hpp"

namespace rokf {

/// Locale-independent shortest form with 12 significant digits ('.' decimal
/// separator, no digit grouping), so identical runs emit identical bytes.
std::string format_number(double v);

/// A numeric/text table with a fixed header row, rendered as RFC-4180-style
/// comma-separated lines with a trailing newline.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  /// Cells are written verbatim; they must not contain commas or newlines.
  void add_row(std::vector<std::string> cells);
  void add_numeric_row(const std::vector<double>& values);

  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Model (de)serialization: a JSON object with fields a, b, c, u_cov, r_cov
/// (row-major nested arrays), mean0 (array), s0. Unknown keys are rejected.
std::string model_to_json_text(const LgssModel& model);
LgssModel model_from_json_text(const std::string& text);

/// Everything a CLI run needs besides the subcommand itself.
struct RunConfig {
  enum class ModelSource { wave_builtin, json_path };

  ModelSource model_source = ModelSource::wave_builtin;
  std::string model_path;  // used when model_source == json_path
  WaveParams params;
  std::vector<int> sweep_sizes{2, 5, 10, 21, 32};
  int offline_horizon = 2500;  // steps for gain-schedule traces
  std::uint64_t seed = 1;
  int jobs = 0;  // <= 0: machine parallelism
  std::string output_dir = ".";
  std::map<std::string, double> tolerances;
};

/// Parse a config document. Every key is optional with the defaults above;
/// unknown keys are rejected so typos cannot silently fall back to defaults.
/// Throws std::invalid_argument with a diagnostic on malformed input.
RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

} // namespace rokf
