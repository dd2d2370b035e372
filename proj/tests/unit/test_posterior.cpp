#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cbayes/posterior.hpp"
#include "cbayes/random.hpp"

using namespace cbayes;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

PriorModel std_normal_1d() { return PriorModel::product({Distribution1D::gaussian(0.0, 1.0)}); }

Potential zero_potential(std::size_t dim) {
  return Potential::custom([](std::span<const double>, const Eigen::VectorXd&) { return 0.0; }, dim);
}

// Posterior N(1, 1) under a N(0, 1) prior.
Potential shift_potential() {
  return Potential::custom([](std::span<const double> u, const Eigen::VectorXd&) { return 0.5 - u[0]; }, 1);
}

const double kHellingerShift = std::sqrt(1.0 - std::exp(-0.125));
const double kTvShift = std::erf(0.5 / std::numbers::sqrt2);

}  // namespace

TEST_CASE("scaled distributions") {
  CHECK(scaled(Distribution1D::laplace(0.0, 1.0), 2.0).variance() == doctest::Approx(8.0));
  CHECK(scaled(Distribution1D::gamma(2.0, 1.0), 3.0).mean() == doctest::Approx(6.0));
  CHECK(scaled(Distribution1D::exponential(2.0), 2.0).mean() == doctest::Approx(1.0));
  CHECK(scaled(Distribution1D::uniform(-1.0, 2.0), 0.5).cdf(0.5) == doctest::Approx(Distribution1D::uniform(-1.0, 2.0).cdf(1.0)));
  CHECK_THROWS_AS(scaled(Distribution1D::gaussian(0, 1), 0.0), std::invalid_argument);
}

TEST_CASE("prior model") {
  const auto p = PriorModel::series(SeriesPrior{}, 4);
  CHECK(p.dimension() == 8);
  CHECK(p.has_product_density());
  const auto law = p.coordinate_law(1);
  REQUIRE(law.has_value());
  CHECK(law->variance() == doctest::Approx(2.0 * std::pow(2.0, -2.5)));
  const auto sc = p.coordinate_scales();
  CHECK(sc[0] == doctest::Approx(std::sqrt(2.0)));
  std::vector<double> draw(8);
  p.draw(5, draw);
  CHECK(draw == sample_field(SeriesPrior{}, 4, 5).coefficients);

  SeriesPrior h;
  h.law = HierarchicalLaw{Distribution1D::gamma(2.0, 1.0), Distribution1D::gaussian(0.0, 1.0)};
  const auto hp = PriorModel::series(h, 4);
  CHECK_FALSE(hp.has_product_density());
  CHECK_FALSE(hp.coordinate_law(0).has_value());
  CHECK(hp.coordinate_scales()[0] == doctest::Approx(std::sqrt(6.0)));
  CHECK_THROWS(hp.log_density(draw));

  CHECK(p.compatible_with(PriorModel::series(SeriesPrior{}, 4)));
  CHECK_FALSE(p.compatible_with(PriorModel::series(SeriesPrior{}, 8)));
  CHECK_FALSE(p.compatible_with(hp));
}

TEST_CASE("normalization") {
  SUBCASE("Phi = 0 gives Z = 1 exactly") {
    const PosteriorSpec s(PriorModel::series(SeriesPrior{}, 4), zero_potential(8));
    const auto z = normalization(s, 10000, 1);
    CHECK(z.z == 1.0);
    CHECK(z.std_error == 0.0);
    CHECK(z.effective_sample_size == doctest::Approx(10000.0));
  }
  SUBCASE("Gaussian prior, Phi = u^2 / 2 gives 1 / sqrt 2") {
    const auto phi = Potential::gaussian_additive(ForwardModel::linear(Eigen::MatrixXd::Identity(1, 1)), 1.0,
                                                  Eigen::VectorXd::Zero(1));
    const auto z = normalization(PosteriorSpec(std_normal_1d(), phi), 100000, 2);
    CHECK(std::abs(z.z - 1.0 / std::numbers::sqrt2) <= 3.0 * z.std_error);
  }
  SUBCASE("Laplace series prior at N = 8 against a 1e6-sample run") {
    const auto g = ForwardModel::deconvolution(Kernel::algebraic(1.0), equispaced_points(8), 8);
    const auto y = g.apply(sample_field(SeriesPrior{}, 8, 100).coefficients);
    const PosteriorSpec s(PriorModel::series(SeriesPrior{}, 8), Potential::gaussian_additive(g, 0.25, y));
    const auto small = normalization(s, 100000, 3);
    const auto big = normalization(s, 1000000, 4);
    CHECK(std::abs(small.z - big.z) <= 3.0 * std::hypot(small.std_error, big.std_error));
    CHECK(small.effective_sample_size > 100.0);
  }
  SUBCASE("errors") {
    const PosteriorSpec s(std_normal_1d(), zero_potential(1));
    CHECK_THROWS_AS(normalization(s, 10, 1), std::invalid_argument);
    const PosteriorSpec dead(std_normal_1d(),
                             Potential::custom([](std::span<const double>, const Eigen::VectorXd&) { return kInf; }, 1));
    CHECK_THROWS_WITH_AS(normalization(dead, 1000, 1), "effective sample size zero", std::runtime_error);
    CHECK_THROWS_AS(PosteriorSpec(std_normal_1d(), zero_potential(2)), std::invalid_argument);
  }
}

TEST_CASE("Hellinger and total variation against closed forms") {
  const PosteriorSpec s1(std_normal_1d(), zero_potential(1));
  const PosteriorSpec s2(std_normal_1d(), shift_potential());
  SUBCASE("quadrature") {
    const auto h = hellinger(s1, s2, EstimatorMethod::quadrature, 2000, 0);
    const auto t = total_variation(s1, s2, EstimatorMethod::quadrature, 2000, 0);
    CHECK(std::abs(h.value - kHellingerShift) <= 1e-4);
    CHECK(std::abs(t.value - kTvShift) <= 1e-4);
    CHECK(h.method == EstimatorMethod::quadrature);
  }
  SUBCASE("prior Monte Carlo") {
    const auto h = hellinger(s1, s2, EstimatorMethod::prior_mc, 100000, 7);
    const auto t = total_variation(s1, s2, EstimatorMethod::prior_mc, 100000, 7);
    CHECK(std::abs(h.value - kHellingerShift) <= 3.0 * h.std_error);
    CHECK(std::abs(t.value - kTvShift) <= 3.0 * t.std_error);
    CHECK(h.std_error > 0.0);
    CHECK(h.std_error < 0.01);
  }
  SUBCASE("symmetry and identity") {
    const auto ab = hellinger(s1, s2, EstimatorMethod::prior_mc, 5000, 3);
    const auto ba = hellinger(s2, s1, EstimatorMethod::prior_mc, 5000, 3);
    CHECK(ab.value == doctest::Approx(ba.value).epsilon(1e-12));
    CHECK(hellinger(s2, s2, EstimatorMethod::prior_mc, 5000, 3).value == 0.0);
    CHECK(total_variation(s2, s2, EstimatorMethod::prior_mc, 5000, 3).value == 0.0);
  }
  SUBCASE("disjoint supports give distance one") {
    const auto prior = PriorModel::product({Distribution1D::uniform(0.0, 1.0)});
    const PosteriorSpec left(prior, Potential::custom([](std::span<const double> u, const Eigen::VectorXd&) {
                               return u[0] < 0.5 ? 0.0 : kInf;
                             }, 1));
    const PosteriorSpec right(prior, Potential::custom([](std::span<const double> u, const Eigen::VectorXd&) {
                                return u[0] >= 0.5 ? 0.0 : kInf;
                              }, 1));
    CHECK(hellinger(left, right, EstimatorMethod::prior_mc, 5000, 1).value == doctest::Approx(1.0));
    CHECK(total_variation(left, right, EstimatorMethod::prior_mc, 5000, 1).value == doctest::Approx(1.0));
  }
  SUBCASE("metric chain d_H^2 <= d_TV <= sqrt2 d_H") {
    const auto h = hellinger(s1, s2, EstimatorMethod::quadrature, 2000, 0).value;
    const auto t = total_variation(s1, s2, EstimatorMethod::quadrature, 2000, 0).value;
    CHECK(h * h <= t);
    CHECK(t <= std::numbers::sqrt2 * h);
  }
  SUBCASE("errors") {
    const PosteriorSpec other(PriorModel::product({Distribution1D::laplace(0.0, 1.0)}), zero_potential(1));
    CHECK_THROWS_AS(hellinger(s1, other, EstimatorMethod::prior_mc, 5000, 1), std::invalid_argument);
    const PosteriorSpec d3(PriorModel::series(SeriesPrior{}, 2), zero_potential(4));
    CHECK_THROWS_AS(hellinger(d3, d3, EstimatorMethod::quadrature, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS(method_from_string("mcmc"), std::invalid_argument);
    CHECK(method_from_string(to_string(EstimatorMethod::quadrature)) == EstimatorMethod::quadrature);
  }
}

TEST_CASE("ensemble reuse matches the direct estimators") {
  const std::vector<Potential> pots{zero_potential(1), shift_potential()};
  const auto e = build_ensemble(std_normal_1d(), pots, EstimatorMethod::prior_mc, 20000, 11, true);
  CHECK(e.size() == 20000);
  CHECK(e.points.size() == 20000);
  const auto w = e.posterior_weights(1);
  double sum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sum += w[i];
    mean += w[i] * e.points[i];
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK(std::abs(mean - 1.0) < 0.05);
  const PosteriorSpec s1(std_normal_1d(), pots[0]), s2(std_normal_1d(), pots[1]);
  CHECK(hellinger_from_ensemble(e, 0, 1).value ==
        doctest::Approx(hellinger(s1, s2, EstimatorMethod::prior_mc, 20000, 11).value).epsilon(1e-12));
}

TEST_CASE("expectation gap") {
  const std::vector<Potential> pots{zero_potential(1), shift_potential()};
  const auto e = build_ensemble(std_normal_1d(), pots, EstimatorMethod::prior_mc, 100000, 12, true);
  SUBCASE("constant h") {
    const auto r = expectation_gap_from_ensemble([](std::span<const double>) { return 1.0; }, e, 0, 1);
    CHECK(r.lhs <= 1e-12);
    CHECK(r.pass);
  }
  SUBCASE("first coefficient: means differ by one") {
    const auto r = expectation_gap_from_ensemble([](std::span<const double> u) { return u[0]; }, e, 0, 1);
    CHECK(std::abs(r.lhs - 1.0) <= 3.0 * r.std_error);
    CHECK(r.rhs_bound == doctest::Approx(2.0 * std::sqrt(1.0 + 2.0) * kHellingerShift).epsilon(0.02));
    CHECK(r.pass);
  }
  SUBCASE("indicator of a box is bounded by TV") {
    const auto r = expectation_gap_from_ensemble([](std::span<const double> u) { return u[0] > 0.5 ? 1.0 : 0.0; }, e, 0, 1);
    CHECK(r.lhs <= r.total_variation + 1e-12);
    CHECK(r.pass);
  }
  SUBCASE("through PosteriorSpec") {
    const PosteriorSpec s1(std_normal_1d(), pots[0]), s2(std_normal_1d(), pots[1]);
    CHECK(expectation_gap_check([](std::span<const double> u) { return u[0] * u[0]; }, s1, s2, 50000, 3).pass);
  }
}

TEST_CASE("random-walk Metropolis") {
  SUBCASE("Phi = 0 recovers the Laplace prior") {
    const PosteriorSpec s(PriorModel::product({Distribution1D::laplace(0.0, 1.0)}), zero_potential(1));
    const double step = tune_step_size(s, 4);
    const auto chain = rw_metropolis(s, 200000, step, 5);
    CHECK(chain.acceptance_rate > 0.1);
    CHECK(chain.acceptance_rate < 0.7);
    // Thinned KS test; thinning by 20 leaves roughly independent draws.
    std::vector<double> xs;
    for (std::size_t i = 0; i < chain.states.size(); i += 20) xs.push_back(chain.states[i][0]);
    std::sort(xs.begin(), xs.end());
    const auto law = Distribution1D::laplace(0.0, 1.0);
    double d = 0.0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double f = law.cdf(xs[i]);
      d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    CHECK(d < 2.0 / std::sqrt(n));
  }
  SUBCASE("conjugate Gaussian posterior mean and variance") {
    const auto phi = Potential::gaussian_additive(ForwardModel::linear(Eigen::MatrixXd::Identity(1, 1)), 1.0,
                                                  Eigen::VectorXd::Constant(1, 1.0));
    const PosteriorSpec s(std_normal_1d(), phi);
    const auto chain = rw_metropolis(s, 200000, tune_step_size(s, 6), 7);
    // Batch means for the Monte Carlo error of the chain average.
    const std::size_t batches = 50, len = chain.states.size() / batches;
    std::vector<double> bm(batches);
    double m2 = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t i = 0; i < len; ++i) {
        const double x = chain.states[b * len + i][0];
        bm[b] += x / len;
        m2 += x * x / (batches * len);
      }
    }
    double mean = 0.0;
    for (double v : bm) mean += v / batches;
    double var = 0.0;
    for (double v : bm) var += (v - mean) * (v - mean) / (batches - 1);
    CHECK(std::abs(mean - 0.5) <= 3.0 * std::sqrt(var / batches));
    CHECK(std::abs(m2 - mean * mean - 0.5) < 0.03);
  }
  SUBCASE("deterministic under a fixed seed") {
    const PosteriorSpec s(std_normal_1d(), shift_potential());
    CHECK(rw_metropolis(s, 1000, 1.0, 3).states == rw_metropolis(s, 1000, 1.0, 3).states);
    CHECK_THROWS_AS(rw_metropolis(s, 10, 0.0, 3), std::invalid_argument);
  }
}
