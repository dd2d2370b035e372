#include <doctest.h>

#include <cmath>
#include <vector>

#include "cbayes/convexity.hpp"
#include "cbayes/random.hpp"

using namespace cbayes;

TEST_CASE("Minkowski combination and linear functionals") {
  const Box a{{0.0, 1.0}, {2.0, 4.0}}, b{{2.0, 3.0}, {0.0, 1.0}};
  const auto c = minkowski_combination(a, b, 0.25);
  CHECK(c[0].lower == doctest::Approx(1.5));
  CHECK(c[0].upper == doctest::Approx(2.5));
  CHECK(c[1].lower == doctest::Approx(0.5));
  CHECK(c[1].upper == doctest::Approx(1.75));
  CHECK_THROWS_AS(minkowski_combination(a, Box{{0, 1}}, 0.5), std::invalid_argument);
  const LinearFunctional f{{{0, 2.0}, {2, -1.0}, {9, 5.0}}};
  const std::vector<double> u{1.0, 7.0, 3.0};
  CHECK(f(u) == doctest::Approx(-1.0));
}

TEST_CASE("hand-counted point sets") {
  const std::vector<double> pts{0.1, 0.5, 0.9, 1.5};
  const Box a{{0.0, 0.6}}, b{{0.4, 1.0}};
  SUBCASE("unweighted") {
    // C = [0.2, 0.8] holds one of four points; A and B hold two each.
    const auto r = convexity_from_points(pts, 1, {}, a, b, 0.5);
    CHECK(r.lhs == doctest::Approx(0.25));
    CHECK(r.prob_a == doctest::Approx(0.5));
    CHECK(r.prob_b == doctest::Approx(0.5));
    CHECK(r.rhs == doctest::Approx(0.5));
    CHECK(r.margin == doctest::Approx(-0.25));
    CHECK(r.samples == 4);
  }
  SUBCASE("weighted") {
    const std::vector<double> w{1.0, 2.0, 1.0, 0.0};
    const auto r = convexity_from_points(pts, 1, w, a, b, 0.5);
    CHECK(r.lhs == doctest::Approx(0.5));
    CHECK(r.prob_a == doctest::Approx(0.75));
    CHECK(r.prob_b == doctest::Approx(0.75));
  }
  SUBCASE("lambda at the ends reduces to one box") {
    const auto r = convexity_from_points(pts, 1, {}, a, b, 1.0);
    CHECK(r.lhs == doctest::Approx(r.prob_a));
    CHECK(r.rhs == doctest::Approx(r.prob_a));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(convexity_from_points(pts, 1, {}, a, b, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(convexity_from_points(pts, 3, {}, Box(3, {0, 1}), Box(3, {0, 1}), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(convexity_from_points(pts, 1, std::vector<double>{1.0}, a, b, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(convexity_from_points(pts, 1, {}, Box{{1.0, 0.0}}, b, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(convexity_from_points(pts, 2, {}, a, b, 0.5), std::invalid_argument);
    const std::vector<double> one{0.5};
    CHECK_THROWS_AS(convexity_from_points(one, 1, {}, a, b, 0.5), std::invalid_argument);
  }
}

TEST_CASE("log-concave Gaussian sample satisfies the inequality") {
  std::vector<double> pts(2 * 50000);
  for (std::size_t i = 0; i < 50000; ++i) {
    CounterRng rng(sample_seed(31, i));
    pts[2 * i] = standard_normal(rng);
    pts[2 * i + 1] = 0.5 * pts[2 * i] + standard_normal(rng);
  }
  for (double lambda : {0.2, 0.5, 0.8}) {
    const auto r = convexity_from_points(pts, 2, {}, {{-2.0, -1.0}, {-1.0, 0.0}}, {{0.5, 2.0}, {0.0, 1.5}}, lambda);
    CHECK(r.pass);
    CHECK(r.std_error > 0.0);
  }
}

TEST_CASE("a bimodal sample violates the inequality") {
  // Two well-separated clusters: the midpoint box is nearly empty.
  std::vector<double> pts(20000);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CounterRng rng(sample_seed(32, i));
    pts[i] = (i % 2 == 0 ? -5.0 : 5.0) + 0.3 * standard_normal(rng);
  }
  const auto r = convexity_from_points(pts, 1, {}, {{-6.0, -4.0}}, {{4.0, 6.0}}, 0.5);
  CHECK_FALSE(r.pass);
  CHECK(r.margin < -0.4);
}
