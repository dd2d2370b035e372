#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace cbayes {

inline constexpr const char* kVersion = "0.1.0";

/// Names accepted by run_experiment.
const std::vector<std::string>& experiment_names();

/// Built-in parameters of an experiment; user configs are merged over these.
nlohmann::json default_parameters(const std::string& experiment);

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  nlohmann::json params;  ///< defaults merged with the user's overrides

  /// Reads {"experiment": ..., "seed": ..., ...}. A seed given here overrides the
  /// file; without either the config is rejected.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::optional<std::string>& experiment = std::nullopt,
                                    const std::optional<std::uint64_t>& seed = std::nullopt);
  nlohmann::json to_json() const;
};

/// One measurement; also one CSV row (x, value, stderr, method, effort).
struct DataPoint {
  double x = 0.0;
  std::optional<double> value;  ///< empty when the estimator failed at this point
  double std_error = 0.0;
  std::string method;
  std::size_t effort = 0;
  std::string series;
  std::string error;
};

struct Verdict {
  std::string name;
  bool pass = false;
  nlohmann::json measured;
  std::string tolerance;  ///< the rule the measurement was judged against
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;  ///< log of the fitted constant
  double slope_std_error = 0.0;
  double ci_lower = 0.0;   ///< 95% Student-t interval on the slope
  double ci_upper = 0.0;
  std::size_t points = 0;
};

/// Least squares of log(y) on log(x); needs at least 3 positive points.
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<DataPoint> points;
  std::optional<LogLogFit> fit;
  std::vector<Verdict> verdicts;
  nlohmann::json details = nlohmann::json::object();

  bool all_pass() const;
  /// Deterministic: no timestamps or host data, so equal configs give equal bytes.
  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

std::uint64_t config_hash(const nlohmann::json& config);

ExperimentReport run_stability(const ExperimentConfig& config);
ExperimentReport run_consistency(const ExperimentConfig& config);
ExperimentReport run_convexity(const ExperimentConfig& config);
ExperimentReport run_metrics(const ExperimentConfig& config);
ExperimentReport run_audit(const ExperimentConfig& config);
ExperimentReport run_map_demo(const ExperimentConfig& config);

ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace cbayes
