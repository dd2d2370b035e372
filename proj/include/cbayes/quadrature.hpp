#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cbayes/distribution.hpp"

namespace cbayes {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// 20-point Gauss-Legendre on each of `panels` equal sub-intervals of [a, b].
QuadratureRule composite_gauss_legendre(double a, double b, std::size_t panels);

/// Same, with extra panel boundaries forced at `breaks` (kinks, support ends).
QuadratureRule composite_gauss_legendre(double a, double b, std::size_t panels, std::vector<double> breaks);

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t panels);

/// Rule for integrals against d: sum_i w_i f(x_i) ~ E_d f(X).
/// The range is cut at the 1e-14 quantiles, panels break at kinks and the
/// mode, and weights are renormalized to sum to one.
QuadratureRule distribution_rule(const Distribution1D& d, std::size_t panels);

}  // namespace cbayes
