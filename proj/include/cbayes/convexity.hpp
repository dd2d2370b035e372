#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cbayes/series_prior.hpp"

namespace cbayes {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Axis-aligned box, one interval per marginal coordinate.
using Box = std::vector<Interval>;

/// lambda * A + (1 - lambda) * B, again a box.
Box minkowski_combination(const Box& a, const Box& b, double lambda);

/// Sum of weight * coefficient[position] over the terms.
struct LinearFunctional {
  std::vector<std::pair<std::size_t, double>> terms;

  double operator()(std::span<const double> coefficients) const noexcept;
};

/// Empirical check of mu(lambda A + (1 - lambda) B) >= mu(A)^lambda mu(B)^(1 - lambda).
struct ConvexityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;     ///< lhs - rhs
  double std_error = 0.0;  ///< delta-method standard error of the margin
  double lhs_std_error = 0.0;
  double rhs_std_error = 0.0;
  double prob_a = 0.0;
  double prob_b = 0.0;
  bool pass = false;       ///< margin >= -3 * std_error
  std::size_t samples = 0;
};

/// Core estimator on marginal points (row-major, `dim` values per sample),
/// optionally reweighted (self-normalized) by `weights`.
ConvexityReport convexity_from_points(std::span<const double> points, std::size_t dim, std::span<const double> weights,
                                      const Box& a, const Box& b, double lambda);

/// Marginal of the series prior under <= 2 linear functionals.
ConvexityReport marginal_convexity_test(const SeriesPrior& prior, std::span<const LinearFunctional> functionals,
                                        const Box& a, const Box& b, double lambda, std::size_t truncation,
                                        std::size_t num_samples, std::uint64_t seed);

}  // namespace cbayes
