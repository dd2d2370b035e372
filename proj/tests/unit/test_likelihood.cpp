#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "cbayes/experiments.hpp"
#include "cbayes/likelihood.hpp"
#include "cbayes/random.hpp"

using namespace cbayes;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Eigen::VectorXd gaussian_vector(CounterRng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
  return v;
}

}  // namespace

TEST_CASE("evaluate examples") {
  const auto id = ForwardModel::linear(Eigen::MatrixXd::Identity(1, 1));
  const auto phi = Potential::gaussian_additive(id, 1.0, vec({2.0}));
  const std::vector<double> zero{0.0};
  CHECK(phi.evaluate(zero) == doctest::Approx(2.0));
  const std::vector<double> exact{2.0};
  CHECK(phi.evaluate(exact) == 0.0);

  const auto mult = Potential::multiplicative_uniform(1.0, 2);
  const double e1 = std::exp(-1.0);
  const std::vector<double> inside{e1 * 0.6, e1 * 0.8};
  CHECK(mult.evaluate(inside) == doctest::Approx(-1.0));
  const std::vector<double> outside{2.0, 0.0};
  CHECK(mult.evaluate(outside) == std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(Potential::gaussian_additive(id, -1.0, vec({1.0})), std::invalid_argument);
  CHECK_THROWS_AS(Potential::gaussian_additive(id, 1.0, vec({1.0, 2.0})), std::invalid_argument);
  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(phi.evaluate(wrong), std::invalid_argument);
}

TEST_CASE("full covariance is whitened by Cholesky") {
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  const auto phi = Potential::gaussian_additive(ForwardModel::linear(Eigen::MatrixXd::Identity(2, 2)), cov, vec({1.0, -1.0}));
  const std::vector<double> u{0.3, 0.2};
  const Eigen::VectorXd r = vec({0.3 - 1.0, 0.2 + 1.0});
  CHECK(phi.evaluate(u) == doctest::Approx(0.5 * r.dot(cov.inverse() * r)).epsilon(1e-13));
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(Potential::gaussian_additive(ForwardModel::linear(Eigen::MatrixXd::Identity(2, 2)), bad, vec({0, 0})),
                  std::invalid_argument);
}

TEST_CASE("data continuity by polarization on random triples") {
  Eigen::MatrixXd a(3, 4), l(3, 3);
  CounterRng rng(17);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = standard_normal(rng);
  l << 1.0, 0, 0, 0.3, 0.8, 0, -0.2, 0.1, 0.5;
  const Eigen::MatrixXd cov = l * l.transpose();
  const auto base = Potential::gaussian_additive(ForwardModel::linear(a), cov, Eigen::VectorXd::Zero(3));
  for (std::uint64_t t = 0; t < 1000; ++t) {
    CounterRng r(sample_seed(5, t));
    const Eigen::VectorXd u = gaussian_vector(r, 4), y1 = gaussian_vector(r, 3), y2 = gaussian_vector(r, 3);
    const std::vector<double> uv(u.data(), u.data() + 4);
    const double diff = base.with_data(y1).evaluate(uv) - base.with_data(y2).evaluate(uv);
    const Eigen::VectorXd mid = base.whiten(a * u - 0.5 * (y1 + y2));
    const Eigen::VectorXd dy = base.whiten(y1 - y2);
    CHECK(std::abs(diff + mid.dot(dy)) <= 1e-10 * (1.0 + std::abs(diff)));
    CHECK(std::abs(diff) <= mid.norm() * dy.norm() + 1e-10);
  }
}

TEST_CASE("projection of the potential") {
  const auto g = ForwardModel::deconvolution(Kernel::algebraic(1.0), equispaced_points(8), 16);
  const auto u = sample_field(SeriesPrior{}, 16, 3);
  const auto phi = Potential::gaussian_additive(g, 0.25, g.apply(sample_field(SeriesPrior{}, 16, 4).coefficients));
  const auto phi4 = phi.with_projection(Basis::fourier_circle(), 4);
  CHECK(phi4.projection_level() == 4u);
  auto padded = project(u, 4).coefficients;
  padded.resize(32, 0.0);
  CHECK(phi4.evaluate(u.coefficients) == doctest::Approx(phi.evaluate(padded)));
  CHECK(phi.with_projection(16, 8).evaluate(u.coefficients) == doctest::Approx(phi4.evaluate(u.coefficients)));
}

TEST_CASE("potential gap") {
  const auto basis = Basis::fourier_circle();
  SUBCASE("band-limited input has zero gap") {
    const auto g = ForwardModel::deconvolution(Kernel::algebraic(1.0), equispaced_points(8), 32);
    const auto phi = Potential::gaussian_additive(g, 0.25, Eigen::VectorXd::Constant(8, 0.5));
    auto c = sample_field(SeriesPrior{}, 8, 1).coefficients;
    c.resize(64, 0.0);
    const auto r = potential_gap(phi, basis, 8, c);
    CHECK(r.gap == 0.0);
    CHECK(r.tail_norm == 0.0);
    CHECK(r.certificate_ratio == 0.0);
  }
  SUBCASE("triangle-inequality chain holds pointwise") {
    const auto g = ForwardModel::deconvolution(Kernel::algebraic(1.0), equispaced_points(8), 32);
    for (std::uint64_t t = 0; t < 50; ++t) {
      const Eigen::VectorXd y = g.apply(sample_field(SeriesPrior{}, 32, sample_seed(60, t)).coefficients);
      const auto phi = Potential::gaussian_additive(g, 1.0, y);
      const auto u = sample_field(SeriesPrior{}, 32, sample_seed(61, t));
      for (std::size_t n : {2, 4, 8, 16}) {
        auto pu = project(u, n).coefficients;
        pu.resize(64, 0.0);
        const Eigen::VectorXd gu = g.apply(u.coefficients), gp = g.apply(pu);
        const double bound = 0.5 * (2.0 * y.norm() + gu.norm() + gp.norm()) * (gu - gp).norm();
        CHECK(potential_gap(phi, basis, n, u.coefficients).gap <= bound * (1 + 1e-12));
      }
    }
  }
  SUBCASE("deterministic Laplace-series coefficients") {
    // The tail norm follows the N^-2 tail sum; the gap is bounded by a fixed
    // multiple of it and decays at least that fast.
    const std::size_t ref = 1024;
    const auto g = ForwardModel::deconvolution(Kernel::algebraic(1.0), equispaced_points(8), ref);
    const auto u = deterministic_field(SeriesPrior{}, ref);
    const auto phi = Potential::gaussian_additive(g, 0.25, Eigen::VectorXd::Zero(8));
    std::vector<double> ns, tails, gaps, ratios;
    for (std::size_t n : {4, 8, 16, 32, 64}) {
      const auto r = potential_gap(phi, basis, n, u.coefficients);
      ns.push_back(static_cast<double>(n));
      tails.push_back(r.tail_norm);
      gaps.push_back(r.gap);
      ratios.push_back(r.certificate_ratio);
    }
    CHECK(std::abs(fit_loglog(ns, tails).slope + 2.0) <= 0.3);
    CHECK(fit_loglog(ns, gaps).slope <= -2.0 + 0.3);
    CHECK(*std::max_element(ratios.begin(), ratios.end()) <= 10.0 * ratios.front());
  }
}

TEST_CASE("assumption audit") {
  SUBCASE("identity model stays clean and L_r <= r + ||y||") {
    const auto phi = Potential::gaussian_additive(ForwardModel::linear(Eigen::MatrixXd::Identity(1, 1)), 1.0, vec({2.0}));
    for (double r : {1.0, 10.0}) {
      const auto a = assumption_audit(phi, r, 2000, 3);
      CHECK(a.violations.empty());
      CHECK(a.lower_bound_ok);
      CHECK(a.empirical_m == 0.0);
      CHECK(a.empirical_l_r <= r + 2.0 + 1e-9);
      CHECK(a.empirical_l_r > 0.5 * (r + 2.0));
      CHECK(a.empirical_k_r > 0.0);
    }
  }
  SUBCASE("bounded linear deconvolution model is clean") {
    const auto g = ForwardModel::deconvolution(Kernel::algebraic(1.0), equispaced_points(8), 8);
    const auto phi = Potential::gaussian_additive(g, 0.25, g.apply(sample_field(SeriesPrior{}, 8, 2).coefficients));
    for (double r : {1.0, 10.0}) CHECK(assumption_audit(phi, r, 1000, 4).violations.empty());
  }
  SUBCASE("multiplicative noise is flagged on (i) and (ii)") {
    const auto a = assumption_audit(Potential::multiplicative_uniform(1.0, 2), 1.0, 2000, 5);
    CHECK_FALSE(a.lower_bound_ok);
    CHECK(a.flagged("i"));
    CHECK(a.flagged("ii"));
  }
  SUBCASE("reproducible") {
    const auto phi = Potential::multiplicative_uniform(1.0, 2);
    const auto a = assumption_audit(phi, 1.0, 500, 9), b = assumption_audit(phi, 1.0, 500, 9);
    CHECK(a.empirical_k_r == b.empirical_k_r);
    CHECK(a.empirical_l_r == b.empirical_l_r);
    CHECK(a.violations.size() == b.violations.size());
  }
  CHECK_THROWS_AS(assumption_audit(Potential::multiplicative_uniform(1.0, 1), 0.0, 10, 1), std::invalid_argument);
}

TEST_CASE("potential JSON round trip") {
  const auto g = ForwardModel::deconvolution(Kernel::algebraic(1.0), equispaced_points(4), 4);
  const auto phi = Potential::gaussian_additive(g, 0.5, vec({0.1, 0.2, 0.3, 0.4}));
  const auto back = potential_from_json(potential_to_json(phi));
  const auto u = sample_field(SeriesPrior{}, 4, 1);
  CHECK(back.evaluate(u.coefficients) == phi.evaluate(u.coefficients));
  const auto m = potential_from_json(potential_to_json(Potential::multiplicative_uniform(2.0, 3)));
  const std::vector<double> v{0.5, 0.5, 0.5};
  CHECK(m.evaluate(v) == doctest::Approx(std::log(std::sqrt(0.75))));
}
