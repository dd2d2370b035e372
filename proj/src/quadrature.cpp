#include "cbayes/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cbayes {
namespace {

using Gauss20 = boost::math::quadrature::gauss<double, 20>;

// Appends the 20-point rule on [a, b]. Boost stores the non-negative half of
// the symmetric abscissae only.
void append_panel(QuadratureRule& rule, double a, double b) {
  const auto& x = Gauss20::abscissa();
  const auto& w = Gauss20::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      rule.nodes.push_back(mid);
      rule.weights.push_back(half * w[i]);
      continue;
    }
    rule.nodes.push_back(mid - half * x[i]);
    rule.weights.push_back(half * w[i]);
    rule.nodes.push_back(mid + half * x[i]);
    rule.weights.push_back(half * w[i]);
  }
}

}  // namespace

QuadratureRule composite_gauss_legendre(double a, double b, std::size_t panels) {
  return composite_gauss_legendre(a, b, panels, {});
}

QuadratureRule composite_gauss_legendre(double a, double b, std::size_t panels, std::vector<double> breaks) {
  if (!(b > a) || panels == 0) throw std::invalid_argument("composite_gauss_legendre: need a < b and panels > 0");
  std::vector<double> cuts;
  for (std::size_t i = 0; i <= panels; ++i) cuts.push_back(a + (b - a) * static_cast<double>(i) / panels);
  for (double c : breaks) {
    if (c > a && c < b) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  QuadratureRule rule;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) append_panel(rule, cuts[i], cuts[i + 1]);
  return rule;
}

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t panels) {
  const auto rule = composite_gauss_legendre(a, b, panels);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(rule.nodes[i]);
  return s;
}

QuadratureRule distribution_rule(const Distribution1D& d, std::size_t panels) {
  constexpr double kTail = 1e-14;
  const double lo = std::max(d.support_lower(), d.quantile(kTail));
  const double hi = std::min(d.support_upper(), d.quantile(1.0 - kTail));
  auto breaks = d.kinks();
  breaks.push_back(d.mean());
  auto rule = composite_gauss_legendre(lo, hi, panels, std::move(breaks));
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    rule.weights[i] *= d.density(rule.nodes[i]);
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace cbayes
