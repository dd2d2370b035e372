#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "cbayes/random.hpp"

namespace cbayes {

// Parameterizations follow the usual table of convex laws on the real line.
struct Gaussian {
  double mean = 0.0;
  double sigma = 1.0;
};
struct Exponential {
  double rate = 1.0;
};
struct Laplace {
  double location = 0.0;
  double scale = 1.0;
};
struct Logistic {
  double location = 0.0;
  double scale = 1.0;
};
/// Shape k >= 1, scale lambda; density x^(k-1) exp(-x/lambda) / (Gamma(k) lambda^k).
struct Gamma {
  double shape = 1.0;
  double scale = 1.0;
};
struct Uniform {
  double lower = 0.0;
  double upper = 1.0;
};

/// A one-dimensional log-concave law. Immutable after construction; the
/// constructor rejects parameters outside the convex range.
class Distribution1D {
 public:
  using Kind = std::variant<Gaussian, Exponential, Laplace, Logistic, Gamma, Uniform>;

  explicit Distribution1D(Kind kind);

  static Distribution1D gaussian(double mean, double sigma) { return Distribution1D(Gaussian{mean, sigma}); }
  static Distribution1D exponential(double rate) { return Distribution1D(Exponential{rate}); }
  static Distribution1D laplace(double location, double scale) { return Distribution1D(Laplace{location, scale}); }
  static Distribution1D logistic(double location, double scale) { return Distribution1D(Logistic{location, scale}); }
  static Distribution1D gamma(double shape, double scale) { return Distribution1D(Gamma{shape, scale}); }
  static Distribution1D uniform(double lower, double upper) { return Distribution1D(Uniform{lower, upper}); }

  const Kind& kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;

  double density(double x) const noexcept;
  /// -infinity outside the support.
  double log_density(double x) const noexcept;
  double cdf(double x) const noexcept;
  /// Inverse CDF on [0, 1]; the endpoints map to the support bounds.
  double quantile(double p) const;
  double sample(CounterRng& rng) const noexcept;

  double support_lower() const noexcept;
  double support_upper() const noexcept;
  /// Points where the density is not differentiable inside the closure of the support.
  std::vector<double> kinks() const;

  double mean() const noexcept;
  double variance() const noexcept;
  /// E|X|.
  double abs_mean() const noexcept;
  /// Var|X| = E X^2 - (E|X|)^2.
  double abs_variance() const noexcept;

  friend bool operator==(const Distribution1D& a, const Distribution1D& b);

 private:
  Kind kind_;
};

struct LogConcavityReport {
  double max_second_difference = 0.0;
  bool pass = true;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

/// Checks that log_density is concave on a grid.
///
/// At every interior grid point the quantity
///   (h_l + h_r) / 2 * (slope_right - slope_left)
/// is formed; on a uniform grid it is the plain centred second difference.
/// Using one-sided slopes keeps the check meaningful across the Laplace kink.
/// Triples touching points outside the support are counted as skipped.
LogConcavityReport check_log_concavity(const Distribution1D& d, std::span<const double> grid, double tol);

/// {"kind": "laplace", "params": {"m": 0, "sigma": 1}}; parameter names are
/// the conventional symbols (m, sigma, lambda, s, k, a, b).
nlohmann::json distribution_to_json(const Distribution1D& d);
Distribution1D distribution_from_json(const nlohmann::json& j);

}  // namespace cbayes

template <>
struct nlohmann::adl_serializer<cbayes::Distribution1D> {
  static cbayes::Distribution1D from_json(const json& j) { return cbayes::distribution_from_json(j); }
  static void to_json(json& j, const cbayes::Distribution1D& d) { j = cbayes::distribution_to_json(d); }
};
