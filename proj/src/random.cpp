#include "cbayes/random.hpp"

#include <cmath>
#include <numbers>

namespace cbayes {

double standard_normal(CounterRng& rng) noexcept {
  const double r = std::sqrt(-2.0 * std::log(rng.uniform_open()));
  return r * std::cos(2.0 * std::numbers::pi * rng.uniform_open());
}

std::vector<double> uniform_on_sphere(CounterRng& rng, std::size_t dim, double radius) {
  std::vector<double> x(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (double& v : x) {
      v = standard_normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
  }
  for (double& v : x) v *= radius / norm;
  return x;
}

std::vector<double> uniform_in_ball(CounterRng& rng, std::size_t dim, double radius) {
  const double r = radius * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(dim));
  return uniform_on_sphere(rng, dim, r);
}

double pairwise_sum(std::span<const double> values) noexcept {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace cbayes
