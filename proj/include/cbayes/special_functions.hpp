#pragma once

namespace cbayes::special {

/// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
/// Series expansion below x = a + 1, Lentz continued fraction above;
/// both are iterated to ~1e-15 relative accuracy.
double gamma_p(double a, double x);

/// Upper complement Q(a, x) = 1 - P(a, x), computed without cancellation.
double gamma_q(double a, double x);

/// Standard normal CDF.
double normal_cdf(double z);

/// Standard normal quantile, p in (0, 1).
double normal_quantile(double p);

}  // namespace cbayes::special
