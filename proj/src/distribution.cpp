#include "cbayes/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cbayes/special_functions.hpp"

namespace cbayes {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(double v) { return std::isfinite(v); }

void validate(const Distribution1D::Kind& kind) {
  std::visit(overloaded{
                 [](const Gaussian& g) {
                   require(finite(g.mean) && finite(g.sigma) && g.sigma > 0.0, "Gaussian: need finite m and sigma > 0");
                 },
                 [](const Exponential& e) { require(finite(e.rate) && e.rate > 0.0, "Exponential: need lambda > 0"); },
                 [](const Laplace& l) {
                   require(finite(l.location) && finite(l.scale) && l.scale > 0.0, "Laplace: need finite m and sigma > 0");
                 },
                 [](const Logistic& l) {
                   require(finite(l.location) && finite(l.scale) && l.scale > 0.0, "Logistic: need finite m and s > 0");
                 },
                 [](const Gamma& g) {
                   require(finite(g.shape) && g.shape >= 1.0, "Gamma: shape k >= 1 required for log-concavity");
                   require(finite(g.scale) && g.scale > 0.0, "Gamma: need lambda > 0");
                 },
                 [](const Uniform& u) {
                   require(finite(u.lower) && finite(u.upper) && u.upper > u.lower, "Uniform: need finite a < b");
                 },
             },
             kind);
}

// Root of cdf(x) = p by bracketed Newton; used where no closed-form inverse exists.
double invert_cdf(const Distribution1D& d, double p, double lo, double hi) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = d.cdf(x) - p;
    if (f > 0.0) hi = x; else lo = x;
    const double dens = d.density(x);
    double next = dens > 0.0 ? x - f / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace

Distribution1D::Distribution1D(Kind kind) : kind_(kind) { validate(kind_); }

std::string_view Distribution1D::name() const noexcept {
  return std::visit(overloaded{
                        [](const Gaussian&) { return std::string_view("gaussian"); },
                        [](const Exponential&) { return std::string_view("exponential"); },
                        [](const Laplace&) { return std::string_view("laplace"); },
                        [](const Logistic&) { return std::string_view("logistic"); },
                        [](const Gamma&) { return std::string_view("gamma"); },
                        [](const Uniform&) { return std::string_view("uniform"); },
                    },
                    kind_);
}

double Distribution1D::log_density(double x) const noexcept {
  return std::visit(
      overloaded{
          [x](const Gaussian& g) {
            const double z = (x - g.mean) / g.sigma;
            return -0.5 * z * z - std::log(g.sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
          },
          [x](const Exponential& e) { return x < 0.0 ? -kInf : std::log(e.rate) - e.rate * x; },
          [x](const Laplace& l) { return -std::abs(x - l.location) / l.scale - std::log(2.0 * l.scale); },
          [x](const Logistic& l) {
            // log of e^-z / (s (1 + e^-z)^2), symmetric in z.
            const double z = std::abs(x - l.location) / l.scale;
            return -z - 2.0 * std::log1p(std::exp(-z)) - std::log(l.scale);
          },
          [x](const Gamma& g) {
            if (x < 0.0) return -kInf;
            if (x == 0.0) return g.shape == 1.0 ? -std::log(g.scale) : -kInf;
            return (g.shape - 1.0) * std::log(x) - x / g.scale - std::lgamma(g.shape) - g.shape * std::log(g.scale);
          },
          [x](const Uniform& u) { return (x < u.lower || x > u.upper) ? -kInf : -std::log(u.upper - u.lower); },
      },
      kind_);
}

double Distribution1D::density(double x) const noexcept {
  if (const auto* u = std::get_if<Uniform>(&kind_)) {
    return (x < u->lower || x > u->upper) ? 0.0 : 1.0 / (u->upper - u->lower);
  }
  return std::exp(log_density(x));
}

double Distribution1D::cdf(double x) const noexcept {
  return std::visit(
      overloaded{
          [x](const Gaussian& g) { return special::normal_cdf((x - g.mean) / g.sigma); },
          [x](const Exponential& e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x); },
          [x](const Laplace& l) {
            const double z = (x - l.location) / l.scale;
            return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
          },
          [x](const Logistic& l) {
            const double z = (x - l.location) / l.scale;
            return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
          },
          [x](const Gamma& g) { return x <= 0.0 ? 0.0 : special::gamma_p(g.shape, x / g.scale); },
          [x](const Uniform& u) {
            if (x <= u.lower) return 0.0;
            if (x >= u.upper) return 1.0;
            return (x - u.lower) / (u.upper - u.lower);
          },
      },
      kind_);
}

double Distribution1D::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("quantile: p outside [0, 1]");
  if (p == 0.0) return support_lower();
  if (p == 1.0) return support_upper();
  return std::visit(overloaded{
                        [p](const Gaussian& g) { return g.mean + g.sigma * special::normal_quantile(p); },
                        [p](const Exponential& e) { return -std::log1p(-p) / e.rate; },
                        [p](const Laplace& l) {
                          return p < 0.5 ? l.location + l.scale * std::log(2.0 * p)
                                         : l.location - l.scale * std::log(2.0 * (1.0 - p));
                        },
                        [p](const Logistic& l) { return l.location + l.scale * (std::log(p) - std::log1p(-p)); },
                        [this, p](const Gamma& g) {
                          double hi = g.scale * (g.shape + 10.0 * std::sqrt(g.shape) + 50.0);
                          while (cdf(hi) < p) hi *= 2.0;
                          return invert_cdf(*this, p, 0.0, hi);
                        },
                        [p](const Uniform& u) { return u.lower + p * (u.upper - u.lower); },
                    },
                    kind_);
}

double Distribution1D::sample(CounterRng& rng) const noexcept {
  return std::visit(
      overloaded{
          [&rng](const Gaussian& g) {
            // Box-Muller; the sine branch is discarded so every draw uses exactly two words.
            const double r = std::sqrt(-2.0 * std::log(rng.uniform_open()));
            return g.mean + g.sigma * r * std::cos(2.0 * std::numbers::pi * rng.uniform_open());
          },
          [&rng](const Exponential& e) { return -std::log(rng.uniform_open()) / e.rate; },
          [&rng](const Laplace& l) {
            const double u = rng.uniform_open();
            return u < 0.5 ? l.location + l.scale * std::log(2.0 * u) : l.location - l.scale * std::log(2.0 * (1.0 - u));
          },
          [&rng](const Logistic& l) {
            const double u = rng.uniform_open();
            return l.location + l.scale * (std::log(u) - std::log1p(-u));
          },
          [&rng](const Gamma& g) {
            if (g.shape == std::floor(g.shape) && g.shape <= 64.0) {
              double s = 0.0;
              for (int i = 0; i < static_cast<int>(g.shape); ++i) s -= std::log(rng.uniform_open());
              return s * g.scale;
            }
            // Marsaglia-Tsang squeeze/rejection, valid for shape >= 1.
            const double d = g.shape - 1.0 / 3.0;
            const double c = 1.0 / std::sqrt(9.0 * d);
            for (;;) {
              const double r = std::sqrt(-2.0 * std::log(rng.uniform_open()));
              const double z = r * std::cos(2.0 * std::numbers::pi * rng.uniform_open());
              double v = 1.0 + c * z;
              if (v <= 0.0) continue;
              v = v * v * v;
              const double u = rng.uniform_open();
              if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v * g.scale;
            }
          },
          [&rng](const Uniform& u) { return u.lower + rng.uniform_open() * (u.upper - u.lower); },
      },
      kind_);
}

double Distribution1D::support_lower() const noexcept {
  return std::visit(overloaded{
                        [](const Exponential&) { return 0.0; },
                        [](const Gamma&) { return 0.0; },
                        [](const Uniform& u) { return u.lower; },
                        [](const auto&) { return -kInf; },
                    },
                    kind_);
}

double Distribution1D::support_upper() const noexcept {
  if (const auto* u = std::get_if<Uniform>(&kind_)) return u->upper;
  return kInf;
}

std::vector<double> Distribution1D::kinks() const {
  if (const auto* l = std::get_if<Laplace>(&kind_)) return {l->location};
  return {};
}

double Distribution1D::mean() const noexcept {
  return std::visit(overloaded{
                        [](const Gaussian& g) { return g.mean; },
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [](const Laplace& l) { return l.location; },
                        [](const Logistic& l) { return l.location; },
                        [](const Gamma& g) { return g.shape * g.scale; },
                        [](const Uniform& u) { return 0.5 * (u.lower + u.upper); },
                    },
                    kind_);
}

double Distribution1D::variance() const noexcept {
  return std::visit(overloaded{
                        [](const Gaussian& g) { return g.sigma * g.sigma; },
                        [](const Exponential& e) { return 1.0 / (e.rate * e.rate); },
                        [](const Laplace& l) { return 2.0 * l.scale * l.scale; },
                        [](const Logistic& l) { return l.scale * l.scale * std::numbers::pi * std::numbers::pi / 3.0; },
                        [](const Gamma& g) { return g.shape * g.scale * g.scale; },
                        [](const Uniform& u) { return (u.upper - u.lower) * (u.upper - u.lower) / 12.0; },
                    },
                    kind_);
}

double Distribution1D::abs_mean() const noexcept {
  return std::visit(
      overloaded{
          [](const Gaussian& g) {
            const double z = g.mean / g.sigma;
            return g.sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z) +
                   g.mean * (1.0 - 2.0 * special::normal_cdf(-z));
          },
          [](const Exponential& e) { return 1.0 / e.rate; },
          [](const Laplace& l) { return std::abs(l.location) + l.scale * std::exp(-std::abs(l.location) / l.scale); },
          [](const Logistic& l) {
            // E|X| = E X + 2 E[X^-], and E[X^-] = s * softplus(-m/s).
            const double t = -l.location / l.scale;
            const double softplus = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
            return l.location + 2.0 * l.scale * softplus;
          },
          [](const Gamma& g) { return g.shape * g.scale; },
          [](const Uniform& u) {
            if (u.lower >= 0.0) return 0.5 * (u.lower + u.upper);
            if (u.upper <= 0.0) return -0.5 * (u.lower + u.upper);
            return (u.lower * u.lower + u.upper * u.upper) / (2.0 * (u.upper - u.lower));
          },
      },
      kind_);
}

double Distribution1D::abs_variance() const noexcept {
  const double m = mean();
  const double a = abs_mean();
  return std::max(0.0, variance() + m * m - a * a);
}

bool operator==(const Distribution1D& a, const Distribution1D& b) {
  return std::visit(
      [](const auto& x, const auto& y) -> bool {
        using X = std::decay_t<decltype(x)>;
        using Y = std::decay_t<decltype(y)>;
        if constexpr (!std::is_same_v<X, Y>) {
          return false;
        } else if constexpr (std::is_same_v<X, Exponential>) {
          return x.rate == y.rate;
        } else if constexpr (std::is_same_v<X, Gaussian>) {
          return x.mean == y.mean && x.sigma == y.sigma;
        } else if constexpr (std::is_same_v<X, Gamma>) {
          return x.shape == y.shape && x.scale == y.scale;
        } else if constexpr (std::is_same_v<X, Uniform>) {
          return x.lower == y.lower && x.upper == y.upper;
        } else {
          return x.location == y.location && x.scale == y.scale;
        }
      },
      a.kind_, b.kind_);
}

LogConcavityReport check_log_concavity(const Distribution1D& d, std::span<const double> grid, double tol) {
  if (grid.size() < 3) throw std::invalid_argument("check_log_concavity: need at least 3 grid points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("check_log_concavity: grid must be strictly increasing");
  }
  LogConcavityReport report;
  report.max_second_difference = -kInf;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double fl = d.log_density(grid[i - 1]);
    const double fc = d.log_density(grid[i]);
    const double fr = d.log_density(grid[i + 1]);
    if (!std::isfinite(fl) || !std::isfinite(fc) || !std::isfinite(fr)) {
      ++report.skipped;
      continue;
    }
    const double hl = grid[i] - grid[i - 1];
    const double hr = grid[i + 1] - grid[i];
    const double second = 0.5 * (hl + hr) * ((fr - fc) / hr - (fc - fl) / hl);
    report.max_second_difference = std::max(report.max_second_difference, second);
    ++report.evaluated;
    if (second > tol) report.pass = false;
  }
  if (report.evaluated == 0) report.max_second_difference = 0.0;
  return report;
}

nlohmann::json distribution_to_json(const Distribution1D& d) {
  nlohmann::json params = std::visit(overloaded{
                                         [](const Gaussian& g) { return nlohmann::json{{"m", g.mean}, {"sigma", g.sigma}}; },
                                         [](const Exponential& e) { return nlohmann::json{{"lambda", e.rate}}; },
                                         [](const Laplace& l) { return nlohmann::json{{"m", l.location}, {"sigma", l.scale}}; },
                                         [](const Logistic& l) { return nlohmann::json{{"m", l.location}, {"s", l.scale}}; },
                                         [](const Gamma& g) { return nlohmann::json{{"k", g.shape}, {"lambda", g.scale}}; },
                                         [](const Uniform& u) { return nlohmann::json{{"a", u.lower}, {"b", u.upper}}; },
                                     },
                                     d.kind());
  return {{"kind", std::string(d.name())}, {"params", std::move(params)}};
}

Distribution1D distribution_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const auto& p = j.at("params");
  auto get = [&p](const char* key) { return p.at(key).get<double>(); };
  if (kind == "gaussian") return Distribution1D::gaussian(get("m"), get("sigma"));
  if (kind == "exponential") return Distribution1D::exponential(get("lambda"));
  if (kind == "laplace") return Distribution1D::laplace(get("m"), get("sigma"));
  if (kind == "logistic") return Distribution1D::logistic(get("m"), get("s"));
  if (kind == "gamma") return Distribution1D::gamma(get("k"), get("lambda"));
  if (kind == "uniform") return Distribution1D::uniform(get("a"), get("b"));
  throw std::invalid_argument("unknown distribution kind: " + kind);
}

}  // namespace cbayes
