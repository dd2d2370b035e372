#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbayes/distribution.hpp"
#include "cbayes/likelihood.hpp"
#include "cbayes/series_prior.hpp"

namespace cbayes {

/// Law of X * scale for scale > 0, as a Distribution1D of the same family.
Distribution1D scaled(const Distribution1D& d, double scale);

/// Finite-dimensional prior on coefficient vectors: a truncated series prior
/// or an explicit product of one-dimensional laws. Cheap to copy.
class PriorModel {
 public:
  static PriorModel series(SeriesPrior prior, std::size_t truncation);
  static PriorModel product(std::vector<Distribution1D> factors);

  std::size_t dimension() const noexcept;
  /// One prior draw; the i-th Monte Carlo sample uses sample_seed(seed, i).
  void draw(std::uint64_t sample_seed, std::span<double> out) const;

  /// Law of coordinate p, when coordinates are independent with a known law.
  /// Empty for hierarchical coefficients; a zero-scale coordinate has none either.
  std::optional<Distribution1D> coordinate_law(std::size_t p) const;
  bool has_product_density() const noexcept;
  /// Sum of coordinate log densities; throws when !has_product_density().
  double log_density(std::span<const double> u) const;
  /// Standard deviation of each coordinate (0 for coordinates pinned at 0).
  std::vector<double> coordinate_scales() const;

  bool compatible_with(const PriorModel& other) const;
  const SeriesPrior* series_prior() const noexcept;
  std::size_t truncation() const noexcept;

 private:
  struct State;
  explicit PriorModel(std::shared_ptr<const State> state) : state_(std::move(state)) {}
  std::shared_ptr<const State> state_;
};

/// Posterior d mu^y / d mu_0 = exp(-Phi(u; y)) / Z(y).
struct PosteriorSpec {
  PriorModel prior;
  Potential potential;

  PosteriorSpec(PriorModel prior_model, Potential phi);
};

enum class EstimatorMethod { prior_mc, quadrature };
std::string to_string(EstimatorMethod m);
EstimatorMethod method_from_string(const std::string& s);

struct NormalizationEstimate {
  double z = 0.0;
  double std_error = 0.0;
  double effective_sample_size = 0.0;
  std::size_t samples = 0;
};

/// Prior Monte Carlo mean of exp(-Phi). Throws std::runtime_error
/// ("effective sample size zero") if every weight underflows.
NormalizationEstimate normalization(const PosteriorSpec& spec, std::size_t num_samples, std::uint64_t seed);

/// Distance estimate between two posteriors sharing one prior.
struct MetricEstimate {
  double value = 0.0;
  double std_error = 0.0;
  EstimatorMethod method = EstimatorMethod::prior_mc;
  std::size_t effort = 0;  ///< samples (MC) or nodes per dimension (quadrature)
  std::uint64_t seed = 0;
};
using HellingerEstimate = MetricEstimate;

nlohmann::json estimate_to_json(const MetricEstimate& e);

/// Reference sample set with base weights (1/n for Monte Carlo, quadrature
/// weights otherwise) and -Phi evaluated for each potential on the same points.
struct WeightedEnsemble {
  std::vector<double> points;        ///< row-major, dim values per point
  std::size_t dim = 0;
  std::vector<double> base_weights;  ///< sum to 1
  std::vector<std::vector<double>> log_weights;
  EstimatorMethod method = EstimatorMethod::prior_mc;
  std::size_t effort = 0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return base_weights.size(); }
  /// Normalized posterior weights p_i (sum to 1) for potential k.
  std::vector<double> posterior_weights(std::size_t k) const;
};

/// Draws the shared prior sample (or builds the tensor quadrature grid, dim <= 2)
/// and evaluates every potential on it. `keep_points` retains the coordinates.
WeightedEnsemble build_ensemble(const PriorModel& prior, std::span<const Potential> potentials, EstimatorMethod method,
                                std::size_t effort, std::uint64_t seed, bool keep_points = false);

/// d_H between the posteriors of potentials a and b of the ensemble, computed as
/// sqrt(1/2 sum_i q_i (sqrt(p1_i/q_i) - sqrt(p2_i/q_i))^2), which is
/// sqrt(1 - A / sqrt(Z1 Z2)) rearranged so the radicand cannot go negative.
MetricEstimate hellinger_from_ensemble(const WeightedEnsemble& e, std::size_t a, std::size_t b);
MetricEstimate total_variation_from_ensemble(const WeightedEnsemble& e, std::size_t a, std::size_t b);

MetricEstimate hellinger(const PosteriorSpec& s1, const PosteriorSpec& s2, EstimatorMethod method, std::size_t effort,
                         std::uint64_t seed);
MetricEstimate total_variation(const PosteriorSpec& s1, const PosteriorSpec& s2, EstimatorMethod method,
                               std::size_t effort, std::uint64_t seed);

struct ExpectationGapReport {
  double lhs = 0.0;        ///< |E1 h - E2 h|
  double rhs_bound = 0.0;  ///< 2 (E1 h^2 + E2 h^2)^(1/2) d_H
  double std_error = 0.0;  ///< of lhs
  double hellinger = 0.0;
  double total_variation = 0.0;
  bool pass = false;       ///< lhs <= rhs_bound + 3 std_error
};

ExpectationGapReport expectation_gap_from_ensemble(const std::function<double(std::span<const double>)>& h,
                                                   const WeightedEnsemble& e, std::size_t a, std::size_t b);
ExpectationGapReport expectation_gap_check(const std::function<double(std::span<const double>)>& h,
                                           const PosteriorSpec& s1, const PosteriorSpec& s2, std::size_t effort,
                                           std::uint64_t seed);

// --- sampling ----------------------------------------------------------------

struct Chain {
  std::vector<std::vector<double>> states;
  double acceptance_rate = 0.0;
  double step_size = 0.0;
};

/// Random-walk Metropolis on coefficients. Proposals are Gaussian with
/// per-coordinate standard deviation step_size * (prior standard deviation),
/// so one step size serves every mode of a decaying series.
Chain rw_metropolis(const PosteriorSpec& spec, std::size_t num_steps, double step_size, std::uint64_t seed);

/// Adapts the step size over short pilot chains toward the target acceptance rate.
double tune_step_size(const PosteriorSpec& spec, std::uint64_t seed, double target_acceptance = 0.3);

}  // namespace cbayes
