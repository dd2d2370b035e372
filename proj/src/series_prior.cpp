#include "cbayes/series_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "cbayes/quadrature.hpp"
#include "cbayes/random.hpp"

namespace cbayes {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double euclidean_norm(std::span<const double> v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x / scale) * (x / scale);
  return scale * std::sqrt(s);
}

}  // namespace

long fourier_index(std::size_t position) noexcept {
  const long p = static_cast<long>(position);
  return (p % 2 == 1) ? -(p + 1) / 2 : p / 2;
}

std::size_t fourier_position(long index) noexcept {
  return index < 0 ? static_cast<std::size_t>(-2 * index - 1) : static_cast<std::size_t>(2 * index);
}

double fourier_basis(long index, double x) noexcept {
  if (index == 0) return 1.0;
  const double arg = 2.0 * std::numbers::pi * static_cast<double>(index < 0 ? -index : index) * x;
  return std::numbers::sqrt2 * (index > 0 ? std::cos(arg) : std::sin(arg));
}

Basis Basis::abstract(std::function<double(std::size_t, double)> evaluate, double lower, double upper) {
  if (!evaluate) throw std::invalid_argument("abstract basis needs an evaluation callback");
  if (!(upper > lower)) throw std::invalid_argument("abstract basis needs a nonempty domain");
  return Basis(AbstractOrthonormal{std::move(evaluate), lower, upper});
}

std::size_t Basis::coefficient_count(std::size_t truncation) const noexcept {
  return is_fourier() ? 2 * truncation : truncation;
}

long Basis::index_at(std::size_t position) const noexcept {
  return is_fourier() ? fourier_index(position) : static_cast<long>(position) + 1;
}

double Basis::evaluate(std::size_t position, double x) const {
  return std::visit(overloaded{
                        [&](const FourierCircle&) { return fourier_basis(fourier_index(position), x); },
                        [&](const AbstractOrthonormal& a) { return a.evaluate(position, x); },
                    },
                    kind_);
}

double Basis::domain_lower() const noexcept {
  if (const auto* a = std::get_if<AbstractOrthonormal>(&kind_)) return a->domain_lower;
  return 0.0;
}

double Basis::domain_upper() const noexcept {
  if (const auto* a = std::get_if<AbstractOrthonormal>(&kind_)) return a->domain_upper;
  return 1.0;
}

OrthonormalityReport check_orthonormality(const Basis& basis, std::size_t count, double tol) {
  // Enough panels to resolve the highest probed oscillation.
  const auto rule = composite_gauss_legendre(basis.domain_lower(), basis.domain_upper(), 4 + count);
  std::vector<std::vector<double>> values(count, std::vector<double>(rule.nodes.size()));
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) values[k][i] = basis.evaluate(k, rule.nodes[i]);
  }
  OrthonormalityReport report;
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = j; k < count; ++k) {
      double ip = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) ip += rule.weights[i] * values[j][i] * values[k][i];
      if (j == k) {
        report.max_norm_error = std::max(report.max_norm_error, std::abs(ip - 1.0));
      } else {
        report.max_inner_product = std::max(report.max_inner_product, std::abs(ip));
      }
    }
  }
  report.pass = report.max_norm_error <= tol && report.max_inner_product <= tol;
  return report;
}

CoefficientSchedule::CoefficientSchedule(Form form) : form_(std::move(form)) {
  std::visit(overloaded{
                 [](const AlgebraicFourier& a) {
                   if (!(a.s > 0.0) || !std::isfinite(a.s)) throw std::invalid_argument("schedule: need s > 0");
                 },
                 [](const AlgebraicSequence& a) {
                   if (!(a.s > 0.0) || !std::isfinite(a.s)) throw std::invalid_argument("schedule: need s > 0");
                 },
                 [](const Explicit& e) {
                   if (e.gammas.empty()) throw std::invalid_argument("schedule: explicit list is empty");
                   for (std::size_t i = 0; i < e.gammas.size(); ++i) {
                     if (!(e.gammas[i] > 0.0) || !std::isfinite(e.gammas[i])) {
                       throw std::invalid_argument("schedule: explicit gammas must be positive");
                     }
                     if (i > 0 && e.gammas[i] > e.gammas[i - 1]) {
                       throw std::invalid_argument("schedule: explicit gammas must be nonincreasing");
                     }
                   }
                 },
             },
             form_);
}

double CoefficientSchedule::gamma(const Basis& basis, std::size_t position) const noexcept {
  return std::visit(overloaded{
                        [&](const AlgebraicFourier& a) {
                          const double k = static_cast<double>(basis.index_at(position));
                          return std::pow(1.0 + k * k, -a.s);
                        },
                        [&](const AlgebraicSequence& a) { return std::pow(static_cast<double>(position + 1), -a.s); },
                        [&](const Explicit& e) { return position < e.gammas.size() ? e.gammas[position] : 0.0; },
                    },
                    form_);
}

void SeriesPrior::validate() const {
  if (!(dilation > 0.0 && dilation <= 1.0)) throw std::invalid_argument("prior: dilation must lie in (0, 1]");
}

double draw_coefficient(const CoefficientLaw& law, std::uint64_t seed, std::size_t position) noexcept {
  CounterRng rng(derive_seed(seed, position));
  return std::visit(overloaded{
                        [&](const IidLaw& l) { return l.law.sample(rng); },
                        [&](const HierarchicalLaw& h) {
                          const double scale = h.scale_law.sample(rng);
                          return scale * h.mode_law.sample(rng);
                        },
                    },
                    law);
}

void sample_coefficients(const SeriesPrior& prior, std::uint64_t seed, std::span<double> out) {
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double scale = prior.scale_at(p);
    out[p] = scale == 0.0 ? 0.0 : scale * draw_coefficient(prior.law, seed, p);
  }
}

FieldSample make_field(std::size_t truncation, std::vector<double> coefficients) {
  FieldSample f;
  f.truncation = truncation;
  f.norm_l2 = euclidean_norm(coefficients);
  f.coefficients = std::move(coefficients);
  return f;
}

FieldSample sample_field(const SeriesPrior& prior, std::size_t truncation, std::uint64_t seed) {
  if (truncation == 0) throw std::invalid_argument("sample_field: truncation must be >= 1");
  prior.validate();
  std::vector<double> c(prior.basis.coefficient_count(truncation));
  sample_coefficients(prior, seed, c);
  return make_field(truncation, std::move(c));
}

FieldSample deterministic_field(const SeriesPrior& prior, std::size_t truncation) {
  std::vector<double> c(prior.basis.coefficient_count(truncation));
  for (std::size_t p = 0; p < c.size(); ++p) c[p] = prior.scale_at(p);
  return make_field(truncation, std::move(c));
}

FieldSample project(const FieldSample& field, std::size_t truncation) {
  if (truncation > field.truncation) throw std::invalid_argument("cannot refine by projection");
  if (truncation == 0) throw std::invalid_argument("project: truncation must be >= 1");
  const std::size_t count = field.coefficients.size() / field.truncation * truncation;
  return make_field(truncation, {field.coefficients.begin(), field.coefficients.begin() + static_cast<long>(count)});
}

double distance_l2(const FieldSample& a, const FieldSample& b) {
  const std::size_t n = std::max(a.coefficients.size(), b.coefficients.size());
  std::vector<double> diff(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < a.coefficients.size() ? a.coefficients[i] : 0.0;
    const double y = i < b.coefficients.size() ? b.coefficients[i] : 0.0;
    diff[i] = x - y;
  }
  return euclidean_norm(diff);
}

double evaluate_field(const Basis& basis, const FieldSample& field, double x) {
  double s = 0.0;
  for (std::size_t p = 0; p < field.coefficients.size(); ++p) s += field.coefficients[p] * basis.evaluate(p, x);
  return s;
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t i) noexcept {
  return derive_seed(seed, 0x5A4D504CULL, i);
}

// --- admissibility ---------------------------------------------------------

namespace {

struct PartialSums {
  double full = 0.0;
  bool cauchy = false;
};

PartialSums partial_sums(const std::function<double(std::size_t)>& term, double exponent, std::size_t terms) {
  PartialSums out;
  const std::size_t half = terms / 2;
  if (std::isinf(exponent)) {
    double first = 0.0;
    double second = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
      double& sup = k < half ? first : second;
      sup = std::max(sup, std::abs(term(k)));
    }
    out.full = std::max(first, second);
    out.cauchy = std::isfinite(out.full) && second <= first * (1.0 + 1e-6);
    return out;
  }
  std::vector<double> values(terms);
  for (std::size_t k = 0; k < terms; ++k) values[k] = std::pow(std::abs(term(k)), exponent);
  const double head = pairwise_sum(std::span<const double>(values).first(half));
  out.full = pairwise_sum(values);
  const double increment = out.full - head;
  out.cauchy = std::isfinite(out.full) && (out.full == 0.0 || increment < 1e-6 * out.full);
  return out;
}

double law_abs_variance(const CoefficientLaw& law) {
  return std::visit(overloaded{
                        [](const IidLaw& l) { return l.law.abs_variance(); },
                        [](const HierarchicalLaw& h) {
                          // Independent factors: E (zeta xi)^2 = E zeta^2 E xi^2, E|zeta xi| = E|zeta| E|xi|.
                          const auto second = [](const Distribution1D& d) { return d.variance() + d.mean() * d.mean(); };
                          const double m = h.scale_law.abs_mean() * h.mode_law.abs_mean();
                          return std::max(0.0, second(h.scale_law) * second(h.mode_law) - m * m);
                        },
                    },
                    law);
}

}  // namespace

AdmissibilityReport admissibility_check(const std::function<double(std::size_t)>& gamma_squared,
                                        const std::function<double(std::size_t)>& var_abs, double p, double q,
                                        std::size_t terms) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw std::invalid_argument("admissibility_check: need p >= 1 and q >= 1");
  if (terms < 100) throw std::invalid_argument("admissibility_check: need at least 100 terms");
  AdmissibilityReport report;
  report.terms = terms;
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  report.conjugate_ok = std::abs(inv_p + inv_q - 1.0) <= 1e-12;
  const auto g = partial_sums(gamma_squared, p, terms);
  const auto v = partial_sums(var_abs, q, terms);
  report.gamma_partial_lp = g.full;
  report.var_partial_lq = v.full;
  report.gamma_cauchy = g.cauchy;
  report.var_cauchy = v.cauchy;
  report.pass = g.cauchy && v.cauchy;
  return report;
}

AdmissibilityReport admissibility_check(const SeriesPrior& prior, double p, double q, std::size_t terms) {
  const double var_abs = law_abs_variance(prior.law);
  return admissibility_check(
      [&prior](std::size_t k) {
        const double g = prior.scale_at(k);
        return g * g;
      },
      [var_abs](std::size_t) { return var_abs; }, p, q, terms);
}

// --- exponential moments -----------------------------------------------------

ExpMomentReport estimate_exp_moment(const SeriesPrior& prior, double eps, std::size_t truncation,
                                    std::size_t num_samples, std::uint64_t seed, double drift_tolerance) {
  if (!(eps >= 0.0)) throw std::invalid_argument("estimate_exp_moment: eps must be >= 0");
  if (num_samples < 2) throw std::invalid_argument("estimate_exp_moment: need at least 2 samples");
  prior.validate();
  std::vector<double> values(num_samples);
  std::vector<double> coeffs(prior.basis.coefficient_count(truncation));
  ExpMomentReport report;
  report.samples = num_samples;
  for (std::size_t i = 0; i < num_samples; ++i) {
    sample_coefficients(prior, sample_seed(seed, i), coeffs);
    values[i] = std::exp(eps * euclidean_norm(coeffs));
    if (std::isinf(values[i])) report.saturated = true;
  }
  const std::size_t half = num_samples / 2;
  const double mean = pairwise_sum(values) / static_cast<double>(num_samples);
  const double mean_half = pairwise_sum(std::span<const double>(values).first(half)) / static_cast<double>(half);
  std::vector<double> sq(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  report.estimate = mean;
  report.std_error = std::sqrt(pairwise_sum(sq) / static_cast<double>(num_samples - 1) / static_cast<double>(num_samples));
  report.doubling_drift = report.saturated ? std::numeric_limits<double>::infinity() : std::abs(mean - mean_half) / mean;
  report.stable = !report.saturated && report.doubling_drift < drift_tolerance;
  return report;
}

// --- serialization -----------------------------------------------------------

nlohmann::json prior_to_json(const SeriesPrior& prior) {
  if (!prior.basis.is_fourier()) throw std::invalid_argument("prior_to_json: abstract bases are not serializable");
  nlohmann::json schedule = std::visit(
      overloaded{
          [](const CoefficientSchedule::AlgebraicFourier& a) { return nlohmann::json{{"form", "algebraic_fourier"}, {"s", a.s}}; },
          [](const CoefficientSchedule::AlgebraicSequence& a) {
            return nlohmann::json{{"form", "algebraic_sequence"}, {"s", a.s}};
          },
          [](const CoefficientSchedule::Explicit& e) { return nlohmann::json{{"form", "explicit"}, {"gammas", e.gammas}}; },
      },
      prior.schedule.form());
  nlohmann::json law = std::visit(overloaded{
                                      [](const IidLaw& l) { return nlohmann::json{{"type", "iid"}, {"distribution", l.law}}; },
                                      [](const HierarchicalLaw& h) {
                                        return nlohmann::json{{"type", "hierarchical"}, {"scale", h.scale_law}, {"mode", h.mode_law}};
                                      },
                                  },
                                  prior.law);
  return {{"basis", {{"kind", "fourier_circle"}}},
          {"schedule", std::move(schedule)},
          {"law", std::move(law)},
          {"dilation", prior.dilation}};
}

SeriesPrior prior_from_json(const nlohmann::json& j) {
  SeriesPrior prior;
  const auto basis = j.value("basis", nlohmann::json{{"kind", "fourier_circle"}});
  if (basis.at("kind").get<std::string>() != "fourier_circle") {
    throw std::invalid_argument("prior_from_json: only the fourier_circle basis is serializable");
  }
  const auto& sched = j.at("schedule");
  const auto form = sched.at("form").get<std::string>();
  if (form == "algebraic_fourier") {
    prior.schedule = CoefficientSchedule::algebraic_fourier(sched.at("s").get<double>());
  } else if (form == "algebraic_sequence") {
    prior.schedule = CoefficientSchedule::algebraic_sequence(sched.at("s").get<double>());
  } else if (form == "explicit") {
    prior.schedule = CoefficientSchedule::explicit_list(sched.at("gammas").get<std::vector<double>>());
  } else {
    throw std::invalid_argument("prior_from_json: unknown schedule form " + form);
  }
  const auto& law = j.at("law");
  const auto type = law.at("type").get<std::string>();
  if (type == "iid") {
    prior.law = IidLaw{law.at("distribution").get<Distribution1D>()};
  } else if (type == "hierarchical") {
    prior.law = HierarchicalLaw{law.at("scale").get<Distribution1D>(), law.at("mode").get<Distribution1D>()};
  } else {
    throw std::invalid_argument("prior_from_json: unknown law type " + type);
  }
  prior.dilation = j.value("dilation", 1.0);
  prior.validate();
  return prior;
}

void write_field_csv(std::ostream& out, const Basis& basis, const FieldSample& field) {
  out << "index,coefficient\n";
  out.precision(17);
  for (std::size_t p = 0; p < field.coefficients.size(); ++p) {
    out << basis.index_at(p) << ',' << field.coefficients[p] << '\n';
  }
}

}  // namespace cbayes
