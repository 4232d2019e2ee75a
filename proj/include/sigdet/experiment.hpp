#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sigdet/core.hpp"
#include "sigdet/noise_channel.hpp"

namespace sigdet {

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind { detect, recover, oracle, coupling, sweep };

const char *to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string &s);

/// One named parameter and its values; `values` is filled from either an
/// explicit list or a {from, to, step} range.
struct ParameterGrid {
  std::string name;
  std::vector<double> values;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string id;
  ExperimentKind kind = ExperimentKind::detect;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::size_t threads = 0; // 0: hardware concurrency
  std::string out;         // CSV path; summary goes next to it
  bool wall_time = false;  // adds a wall_time_s column (breaks byte-identical replay)
  nlohmann::json model;    // {"type": ..., type-specific keys}
  ParameterGrid grid;
  // sweep only
  double level = 0.25;
  std::size_t bootstrap = 200;
};

/// Validates and converts a parsed config. ValidationError names every
/// offending key.
ExperimentConfig parse_config(const nlohmann::json &j);

/// Reads a JSON config file (ValidationError if unreadable or malformed).
ExperimentConfig load_config(const std::string &path);

using Cell = std::variant<std::int64_t, double, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows; // ordered by (param_index, trial)
  nlohmann::json summary;

  std::size_t column(const std::string &name) const;
};

/// Runs trials x grid tasks on a worker pool. Each task uses the stream
/// (seed, stream_id_for(experiment_hash(id), trial, param_index)).
ResultTable run_experiment(const ExperimentConfig &config);

/// Shortest exact text for a double: 17 significant digits.
std::string format_double(double v);

/// CSV with a header row, '\n' line endings.
std::string to_csv(const ResultTable &table);

/// Summary path for a CSV path: foo.csv -> foo.summary.json.
std::string summary_path(const std::string &csv_path);

/// Writes the CSV and its summary.
void write_outputs(const ResultTable &table, const std::string &csv_path);

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for `successes` out of `n` (95% by default).
WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

/// First point where the piecewise-linear curve through (x_i, y_i) meets
/// `level`, or nullopt.
std::optional<double> interpolate_crossing(const std::vector<double> &x,
                                           const std::vector<double> &y, double level);

struct Crossover {
  double value = 0.0;
  double low = 0.0;  // 2.5% bootstrap quantile
  double high = 0.0; // 97.5% bootstrap quantile
  std::size_t replicates = 0; // bootstrap replicates that crossed
};

/// errors[i][t] is the error count of trial t at grid point i, out of
/// `per_trial` decisions. Crossover of the error-rate curve with `level`
/// plus a percentile bootstrap over trials. RangeError if the curve never
/// reaches the level.
Crossover sweep_crossover(const std::vector<double> &x,
                          const std::vector<std::vector<int>> &errors, int per_trial,
                          double level, std::size_t bootstrap, const RngStream &stream);

} // namespace sigdet
