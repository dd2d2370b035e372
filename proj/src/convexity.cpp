#include "cbayes/convexity.hpp"

#include <cmath>
#include <stdexcept>

#include "cbayes/random.hpp"

namespace cbayes {
namespace {

void check_box(const Box& box, std::size_t dim) {
  if (box.size() != dim) throw std::invalid_argument("convexity test: box dimension does not match the marginal");
  for (const auto& iv : box) {
    if (!(iv.upper > iv.lower)) throw std::invalid_argument("convexity test: empty box");
  }
}

bool contains(const Box& box, std::span<const double> x) {
  for (std::size_t d = 0; d < box.size(); ++d) {
    if (x[d] < box[d].lower || x[d] > box[d].upper) return false;
  }
  return true;
}

}  // namespace

Box minkowski_combination(const Box& a, const Box& b, double lambda) {
  if (a.size() != b.size()) throw std::invalid_argument("minkowski_combination: dimension mismatch");
  Box c(a.size());
  for (std::size_t d = 0; d < a.size(); ++d) {
    c[d].lower = lambda * a[d].lower + (1.0 - lambda) * b[d].lower;
    c[d].upper = lambda * a[d].upper + (1.0 - lambda) * b[d].upper;
  }
  return c;
}

double LinearFunctional::operator()(std::span<const double> coefficients) const noexcept {
  double s = 0.0;
  for (const auto& [pos, w] : terms) {
    if (pos < coefficients.size()) s += w * coefficients[pos];
  }
  return s;
}

ConvexityReport convexity_from_points(std::span<const double> points, std::size_t dim, std::span<const double> weights,
                                      const Box& a, const Box& b, double lambda) {
  if (dim == 0 || dim > 2) throw std::invalid_argument("convexity test: marginal must be 1- or 2-dimensional");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("convexity test: lambda must lie in [0, 1]");
  check_box(a, dim);
  check_box(b, dim);
  const std::size_t n = points.size() / dim;
  if (n < 2) throw std::invalid_argument("convexity test: need at least 2 samples");
  if (!weights.empty() && weights.size() != n) throw std::invalid_argument("convexity test: weight count mismatch");
  const Box c = minkowski_combination(a, b, lambda);

  std::vector<double> w(n, 1.0);
  if (!weights.empty()) w.assign(weights.begin(), weights.end());
  std::vector<double> in_a(n), in_b(n), in_c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = points.subspan(i * dim, dim);
    in_a[i] = contains(a, x) ? w[i] : 0.0;
    in_b[i] = contains(b, x) ? w[i] : 0.0;
    in_c[i] = contains(c, x) ? w[i] : 0.0;
  }
  const double total = pairwise_sum(w);
  if (!(total > 0.0)) throw std::invalid_argument("convexity test: weights sum to zero");
  ConvexityReport r;
  r.samples = n;
  r.prob_a = pairwise_sum(in_a) / total;
  r.prob_b = pairwise_sum(in_b) / total;
  r.lhs = pairwise_sum(in_c) / total;
  r.rhs = std::pow(r.prob_a, lambda) * std::pow(r.prob_b, 1.0 - lambda);
  r.margin = r.lhs - r.rhs;

  // Influence function of the margin for self-normalized ratio estimators.
  const double wbar = total / static_cast<double>(n);
  const double da = r.prob_a > 0.0 ? r.rhs * lambda / r.prob_a : 0.0;
  const double db = r.prob_b > 0.0 ? r.rhs * (1.0 - lambda) / r.prob_b : 0.0;
  std::vector<double> sq(n), sq_lhs(n), sq_rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ia = in_a[i] > 0.0 ? 1.0 : 0.0;
    const double ib = in_b[i] > 0.0 ? 1.0 : 0.0;
    const double ic = in_c[i] > 0.0 ? 1.0 : 0.0;
    const double psi_lhs = w[i] / wbar * (ic - r.lhs);
    const double psi_rhs = w[i] / wbar * (da * (ia - r.prob_a) + db * (ib - r.prob_b));
    sq[i] = (psi_lhs - psi_rhs) * (psi_lhs - psi_rhs);
    sq_lhs[i] = psi_lhs * psi_lhs;
    sq_rhs[i] = psi_rhs * psi_rhs;
  }
  const double scale = 1.0 / (static_cast<double>(n - 1) * static_cast<double>(n));
  r.std_error = std::sqrt(pairwise_sum(sq) * scale);
  r.lhs_std_error = std::sqrt(pairwise_sum(sq_lhs) * scale);
  r.rhs_std_error = std::sqrt(pairwise_sum(sq_rhs) * scale);
  // Rounding slack: with A = B the pow() form can land a few ulps below lhs.
  r.pass = r.margin >= -3.0 * r.std_error - 1e-12 * r.rhs;
  return r;
}

ConvexityReport marginal_convexity_test(const SeriesPrior& prior, std::span<const LinearFunctional> functionals,
                                        const Box& a, const Box& b, double lambda, std::size_t truncation,
                                        std::size_t num_samples, std::uint64_t seed) {
  const std::size_t dim = functionals.size();
  if (dim == 0 || dim > 2) throw std::invalid_argument("marginal_convexity_test: select 1 or 2 functionals");
  check_box(a, dim);
  check_box(b, dim);
  std::vector<double> coeffs(prior.basis.coefficient_count(truncation));
  std::vector<double> points(num_samples * dim);
  for (std::size_t i = 0; i < num_samples; ++i) {
    sample_coefficients(prior, sample_seed(seed, i), coeffs);
    for (std::size_t d = 0; d < dim; ++d) points[i * dim + d] = functionals[d](coeffs);
  }
  return convexity_from_points(points, dim, {}, a, b, lambda);
}

}  // namespace cbayes
