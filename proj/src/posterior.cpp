#include "cbayes/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cbayes/quadrature.hpp"
#include "cbayes/random.hpp"

namespace cbayes {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double mean_of(std::span<const double> v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

// Standard error of a mean from influence values psi_i (mean zero in theory).
double influence_std_error(std::span<const double> psi) {
  const std::size_t n = psi.size();
  if (n < 2) return 0.0;
  const double m = mean_of(psi);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (psi[i] - m) * (psi[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(n - 1) / static_cast<double>(n));
}

// exp(lw - shift) with the shift chosen so the largest weight is 1.
std::vector<double> relative_weights(std::span<const double> log_w, double& shift) {
  shift = -kInf;
  for (double v : log_w) shift = std::max(shift, v);
  if (!std::isfinite(shift)) throw std::runtime_error("effective sample size zero");
  std::vector<double> w(log_w.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w[i] - shift);
  return w;
}

}  // namespace

Distribution1D scaled(const Distribution1D& d, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("scaled: scale must be positive");
  return std::visit(overloaded{
                        [s](const Gaussian& g) { return Distribution1D::gaussian(g.mean * s, g.sigma * s); },
                        [s](const Exponential& e) { return Distribution1D::exponential(e.rate / s); },
                        [s](const Laplace& l) { return Distribution1D::laplace(l.location * s, l.scale * s); },
                        [s](const Logistic& l) { return Distribution1D::logistic(l.location * s, l.scale * s); },
                        [s](const Gamma& g) { return Distribution1D::gamma(g.shape, g.scale * s); },
                        [s](const Uniform& u) { return Distribution1D::uniform(u.lower * s, u.upper * s); },
                    },
                    d.kind());
}

// --- PriorModel ----------------------------------------------------------------

struct PriorModel::State {
  std::optional<SeriesPrior> series;
  std::size_t truncation = 0;
  std::size_t dim = 0;
  // Independent coordinate laws (empty entry: coordinate pinned at zero).
  std::vector<std::optional<Distribution1D>> laws;
  bool product_density = false;
  nlohmann::json description;
};

PriorModel PriorModel::series(SeriesPrior prior, std::size_t truncation) {
  if (truncation == 0) throw std::invalid_argument("PriorModel: truncation must be >= 1");
  prior.validate();
  auto st = std::make_shared<State>();
  st->truncation = truncation;
  st->dim = prior.basis.coefficient_count(truncation);
  if (const auto* iid = std::get_if<IidLaw>(&prior.law)) {
    st->product_density = true;
    st->laws.resize(st->dim);
    for (std::size_t p = 0; p < st->dim; ++p) {
      const double s = prior.scale_at(p);
      if (s > 0.0) st->laws[p] = scaled(iid->law, s);
    }
  }
  if (prior.basis.is_fourier()) st->description = {{"series", prior_to_json(prior)}, {"truncation", truncation}};
  st->series = std::move(prior);
  return PriorModel(std::move(st));
}

PriorModel PriorModel::product(std::vector<Distribution1D> factors) {
  if (factors.empty()) throw std::invalid_argument("PriorModel: product needs at least one factor");
  auto st = std::make_shared<State>();
  st->dim = factors.size();
  st->product_density = true;
  nlohmann::json desc = nlohmann::json::array();
  for (auto& f : factors) {
    desc.push_back(distribution_to_json(f));
    st->laws.emplace_back(std::move(f));
  }
  st->description = {{"product", desc}};
  return PriorModel(std::move(st));
}

std::size_t PriorModel::dimension() const noexcept { return state_->dim; }
std::size_t PriorModel::truncation() const noexcept { return state_->truncation; }
bool PriorModel::has_product_density() const noexcept { return state_->product_density; }
const SeriesPrior* PriorModel::series_prior() const noexcept { return state_->series ? &*state_->series : nullptr; }

void PriorModel::draw(std::uint64_t seed, std::span<double> out) const {
  if (out.size() != state_->dim) throw std::invalid_argument("PriorModel::draw: output size mismatch");
  if (state_->series) {
    sample_coefficients(*state_->series, seed, out);
    return;
  }
  for (std::size_t p = 0; p < out.size(); ++p) {
    CounterRng rng(derive_seed(seed, p));
    out[p] = state_->laws[p]->sample(rng);
  }
}

std::optional<Distribution1D> PriorModel::coordinate_law(std::size_t p) const {
  if (!state_->product_density || p >= state_->dim) return std::nullopt;
  return state_->laws[p];
}

double PriorModel::log_density(std::span<const double> u) const {
  if (!state_->product_density) throw std::invalid_argument("PriorModel: hierarchical priors have no product density");
  if (u.size() != state_->dim) throw std::invalid_argument("PriorModel::log_density: dimension mismatch");
  double s = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    if (state_->laws[p]) {
      s += state_->laws[p]->log_density(u[p]);
    } else if (u[p] != 0.0) {
      return -kInf;
    }
  }
  return s;
}

std::vector<double> PriorModel::coordinate_scales() const {
  std::vector<double> out(state_->dim, 0.0);
  if (state_->product_density) {
    for (std::size_t p = 0; p < out.size(); ++p) {
      if (state_->laws[p]) out[p] = std::sqrt(state_->laws[p]->variance());
    }
    return out;
  }
  const auto& prior = *state_->series;
  const auto& h = std::get<HierarchicalLaw>(prior.law);
  const auto second = [](const Distribution1D& d) { return d.variance() + d.mean() * d.mean(); };
  const double unit = std::sqrt(second(h.scale_law) * second(h.mode_law));
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = prior.scale_at(p) * unit;
  return out;
}

bool PriorModel::compatible_with(const PriorModel& other) const {
  if (state_ == other.state_) return true;
  if (state_->dim != other.state_->dim) return false;
  return !state_->description.is_null() && state_->description == other.state_->description;
}

PosteriorSpec::PosteriorSpec(PriorModel prior_model, Potential phi) : prior(std::move(prior_model)), potential(std::move(phi)) {
  if (potential.input_dim() != prior.dimension()) {
    throw std::invalid_argument("PosteriorSpec: potential input dimension does not match the prior truncation");
  }
}

std::string to_string(EstimatorMethod m) { return m == EstimatorMethod::prior_mc ? "prior_mc" : "quadrature"; }

EstimatorMethod method_from_string(const std::string& s) {
  if (s == "prior_mc") return EstimatorMethod::prior_mc;
  if (s == "quadrature") return EstimatorMethod::quadrature;
  throw std::invalid_argument("unknown estimator method: " + s);
}

nlohmann::json estimate_to_json(const MetricEstimate& e) {
  return {{"value", e.value}, {"stderr", e.std_error}, {"method", to_string(e.method)}, {"effort", e.effort}, {"seed", e.seed}};
}

// --- normalization ---------------------------------------------------------------

NormalizationEstimate normalization(const PosteriorSpec& spec, std::size_t num_samples, std::uint64_t seed) {
  if (num_samples < 1000) throw std::invalid_argument("normalization: need at least 1000 samples");
  const auto e = build_ensemble(spec.prior, std::span<const Potential>(&spec.potential, 1), EstimatorMethod::prior_mc,
                                num_samples, seed);
  std::vector<double> w(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) w[i] = std::exp(e.log_weights[0][i]);
  NormalizationEstimate out;
  out.samples = num_samples;
  out.z = mean_of(w);
  if (!(out.z > 0.0)) throw std::runtime_error("effective sample size zero");
  std::vector<double> psi(num_samples), sq(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    psi[i] = w[i] - out.z;
    sq[i] = w[i] * w[i];
  }
  out.std_error = influence_std_error(psi);
  out.effective_sample_size = out.z * out.z * static_cast<double>(num_samples) / mean_of(sq);
  return out;
}

// --- ensembles -------------------------------------------------------------------

std::vector<double> WeightedEnsemble::posterior_weights(std::size_t k) const {
  double shift = 0.0;
  auto w = relative_weights(log_weights.at(k), shift);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= base_weights[i];
  const double total = pairwise_sum(w);
  if (!(total > 0.0)) throw std::runtime_error("effective sample size zero");
  for (double& v : w) v /= total;
  return w;
}

WeightedEnsemble build_ensemble(const PriorModel& prior, std::span<const Potential> potentials, EstimatorMethod method,
                                std::size_t effort, std::uint64_t seed, bool keep_points) {
  for (const auto& phi : potentials) {
    if (phi.input_dim() != prior.dimension()) throw std::invalid_argument("build_ensemble: potential dimension mismatch");
  }
  WeightedEnsemble e;
  e.dim = prior.dimension();
  e.method = method;
  e.effort = effort;
  e.seed = seed;
  e.log_weights.assign(potentials.size(), {});

  if (method == EstimatorMethod::prior_mc) {
    if (effort < 2) throw std::invalid_argument("build_ensemble: need at least 2 samples");
    e.base_weights.assign(effort, 1.0 / static_cast<double>(effort));
    for (auto& lw : e.log_weights) lw.resize(effort);
    if (keep_points) e.points.resize(effort * e.dim);
    std::vector<double> u(e.dim);
    for (std::size_t i = 0; i < effort; ++i) {
      prior.draw(sample_seed(seed, i), u);
      for (std::size_t k = 0; k < potentials.size(); ++k) e.log_weights[k][i] = -potentials[k].evaluate(u);
      if (keep_points) std::copy(u.begin(), u.end(), e.points.begin() + static_cast<long>(i * e.dim));
    }
    return e;
  }

  if (e.dim > 2) throw std::invalid_argument("quadrature path supports at most 2 dimensions");
  std::vector<QuadratureRule> rules;
  const std::size_t panels = std::max<std::size_t>(1, (effort + 19) / 20);
  for (std::size_t p = 0; p < e.dim; ++p) {
    const auto law = prior.coordinate_law(p);
    if (!law) throw std::invalid_argument("quadrature path needs independent coordinate laws");
    rules.push_back(distribution_rule(*law, panels));
  }
  const std::size_t n0 = rules[0].nodes.size();
  const std::size_t n1 = e.dim == 2 ? rules[1].nodes.size() : 1;
  const std::size_t total = n0 * n1;
  e.base_weights.resize(total);
  e.points.resize(total * e.dim);
  for (auto& lw : e.log_weights) lw.resize(total);
  std::vector<double> u(e.dim);
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const std::size_t idx = i * n1 + j;
      u[0] = rules[0].nodes[i];
      double w = rules[0].weights[i];
      if (e.dim == 2) {
        u[1] = rules[1].nodes[j];
        w *= rules[1].weights[j];
      }
      e.base_weights[idx] = w;
      std::copy(u.begin(), u.end(), e.points.begin() + static_cast<long>(idx * e.dim));
      for (std::size_t k = 0; k < potentials.size(); ++k) e.log_weights[k][idx] = -potentials[k].evaluate(u);
    }
  }
  return e;
}

MetricEstimate hellinger_from_ensemble(const WeightedEnsemble& e, std::size_t a, std::size_t b) {
  MetricEstimate out;
  out.method = e.method;
  out.effort = e.effort;
  out.seed = e.seed;
  const std::size_t n = e.size();
  const auto p1 = e.posterior_weights(a);
  const auto p2 = e.posterior_weights(b);
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::sqrt(p1[i]) - std::sqrt(p2[i]);
    terms[i] = 0.5 * d * d;
  }
  const double h2 = std::min(1.0, pairwise_sum(terms));
  out.value = std::sqrt(h2);
  if (e.method == EstimatorMethod::quadrature) return out;

  // Delta method on h^2 = 1 - mean(sqrt(w1 w2)) / sqrt(mean(w1) mean(w2)),
  // with w_j proportional to p_j (the shared factor cancels).
  std::vector<double> psi(n);
  double abar = 0.0;
  std::vector<double> root(n);
  for (std::size_t i = 0; i < n; ++i) {
    root[i] = std::sqrt(p1[i] * p2[i]);
  }
  abar = mean_of(root);
  const double w1bar = 1.0 / static_cast<double>(n);
  const double w2bar = w1bar;
  const double ratio = abar / std::sqrt(w1bar * w2bar);
  for (std::size_t i = 0; i < n; ++i) {
    psi[i] = -ratio * (root[i] / abar - 0.5 * p1[i] / w1bar - 0.5 * p2[i] / w2bar);
  }
  const double se2 = abar > 0.0 ? influence_std_error(psi) : 0.0;
  out.std_error = out.value > 0.0 ? std::min(se2 / (2.0 * out.value), std::sqrt(se2)) : std::sqrt(se2);
  return out;
}

MetricEstimate total_variation_from_ensemble(const WeightedEnsemble& e, std::size_t a, std::size_t b) {
  MetricEstimate out;
  out.method = e.method;
  out.effort = e.effort;
  out.seed = e.seed;
  const std::size_t n = e.size();
  const auto p1 = e.posterior_weights(a);
  const auto p2 = e.posterior_weights(b);
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = 0.5 * std::abs(p1[i] - p2[i]);
  out.value = std::min(1.0, pairwise_sum(terms));
  if (e.method == EstimatorMethod::quadrature) return out;

  // Influence of T = 1/2 mean|w1/W1 - w2/W2| including the normalizers (W_j = 1/n here).
  const double nn = static_cast<double>(n);
  std::vector<double> s1w1(n), s2w2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sgn = p1[i] > p2[i] ? 1.0 : (p1[i] < p2[i] ? -1.0 : 0.0);
    s1w1[i] = sgn * p1[i] * nn;
    s2w2[i] = sgn * p2[i] * nn;
  }
  const double d1 = -0.5 * mean_of(s1w1);
  const double d2 = 0.5 * mean_of(s2w2);
  std::vector<double> psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    psi[i] = 0.5 * std::abs(p1[i] - p2[i]) * nn - out.value + d1 * (p1[i] * nn - 1.0) + d2 * (p2[i] * nn - 1.0);
  }
  out.std_error = influence_std_error(psi);
  return out;
}

namespace {

void require_compatible(const PosteriorSpec& s1, const PosteriorSpec& s2) {
  if (!s1.prior.compatible_with(s2.prior)) throw std::invalid_argument("posteriors must share the same prior and truncation");
}

}  // namespace

MetricEstimate hellinger(const PosteriorSpec& s1, const PosteriorSpec& s2, EstimatorMethod method, std::size_t effort,
                         std::uint64_t seed) {
  require_compatible(s1, s2);
  const std::vector<Potential> phis{s1.potential, s2.potential};
  return hellinger_from_ensemble(build_ensemble(s1.prior, phis, method, effort, seed), 0, 1);
}

MetricEstimate total_variation(const PosteriorSpec& s1, const PosteriorSpec& s2, EstimatorMethod method,
                               std::size_t effort, std::uint64_t seed) {
  require_compatible(s1, s2);
  const std::vector<Potential> phis{s1.potential, s2.potential};
  return total_variation_from_ensemble(build_ensemble(s1.prior, phis, method, effort, seed), 0, 1);
}

ExpectationGapReport expectation_gap_from_ensemble(const std::function<double(std::span<const double>)>& h,
                                                   const WeightedEnsemble& e, std::size_t a, std::size_t b) {
  if (e.points.size() != e.size() * e.dim) throw std::invalid_argument("expectation_gap: ensemble has no points");
  const std::size_t n = e.size();
  const auto p1 = e.posterior_weights(a);
  const auto p2 = e.posterior_weights(b);
  std::vector<double> hv(n), t1(n), t2(n), q1(n), q2(n);
  for (std::size_t i = 0; i < n; ++i) {
    hv[i] = h(std::span<const double>(e.points).subspan(i * e.dim, e.dim));
    t1[i] = p1[i] * hv[i];
    t2[i] = p2[i] * hv[i];
    q1[i] = p1[i] * hv[i] * hv[i];
    q2[i] = p2[i] * hv[i] * hv[i];
  }
  const double e1 = pairwise_sum(t1);
  const double e2 = pairwise_sum(t2);
  ExpectationGapReport r;
  r.hellinger = hellinger_from_ensemble(e, a, b).value;
  r.total_variation = total_variation_from_ensemble(e, a, b).value;
  r.lhs = std::abs(e1 - e2);
  r.rhs_bound = 2.0 * std::sqrt(pairwise_sum(q1) + pairwise_sum(q2)) * r.hellinger;
  if (e.method == EstimatorMethod::prior_mc) {
    std::vector<double> psi(n);
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) psi[i] = nn * (p1[i] * (hv[i] - e1) - p2[i] * (hv[i] - e2));
    r.std_error = influence_std_error(psi);
  }
  r.pass = r.lhs <= r.rhs_bound + 3.0 * r.std_error;
  return r;
}

ExpectationGapReport expectation_gap_check(const std::function<double(std::span<const double>)>& h,
                                           const PosteriorSpec& s1, const PosteriorSpec& s2, std::size_t effort,
                                           std::uint64_t seed) {
  require_compatible(s1, s2);
  const std::vector<Potential> phis{s1.potential, s2.potential};
  const auto e = build_ensemble(s1.prior, phis, EstimatorMethod::prior_mc, effort, seed, true);
  return expectation_gap_from_ensemble(h, e, 0, 1);
}

// --- random-walk Metropolis ---------------------------------------------------------

Chain rw_metropolis(const PosteriorSpec& spec, std::size_t num_steps, double step_size, std::uint64_t seed) {
  if (!(step_size > 0.0)) throw std::invalid_argument("rw_metropolis: step size must be positive");
  if (!spec.prior.has_product_density()) throw std::invalid_argument("rw_metropolis: prior needs a product density");
  const std::size_t dim = spec.prior.dimension();
  const auto scales = spec.prior.coordinate_scales();
  std::vector<double> u(dim), proposal(dim);
  spec.prior.draw(derive_seed(seed, 0xC0FFEE), u);
  auto log_target = [&spec](std::span<const double> x) {
    const double lp = spec.prior.log_density(x);
    if (lp == -kInf) return -kInf;
    return lp - spec.potential.evaluate(x);
  };
  double current = log_target(u);
  Chain chain;
  chain.step_size = step_size;
  chain.states.reserve(num_steps);
  std::size_t accepted = 0;
  CounterRng rng(derive_seed(seed, 0x4D48));
  for (std::size_t t = 0; t < num_steps; ++t) {
    for (std::size_t p = 0; p < dim; ++p) {
      proposal[p] = scales[p] > 0.0 ? u[p] + step_size * scales[p] * standard_normal(rng) : u[p];
    }
    const double cand = log_target(proposal);
    const double log_u = std::log(rng.uniform_open());
    if (cand != -kInf && log_u < cand - current) {
      u.swap(proposal);
      current = cand;
      ++accepted;
    }
    chain.states.push_back(u);
  }
  chain.acceptance_rate = num_steps ? static_cast<double>(accepted) / static_cast<double>(num_steps) : 0.0;
  return chain;
}

double tune_step_size(const PosteriorSpec& spec, std::uint64_t seed, double target_acceptance) {
  double step = 2.38 / std::sqrt(static_cast<double>(spec.prior.dimension()));
  for (int round = 0; round < 20; ++round) {
    const auto pilot = rw_metropolis(spec, 500, step, derive_seed(seed, static_cast<std::uint64_t>(round)));
    step *= std::exp(2.0 * (pilot.acceptance_rate - target_acceptance));
  }
  return step;
}

}  // namespace cbayes
