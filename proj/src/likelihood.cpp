#include "cbayes/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cbayes/random.hpp"

namespace cbayes {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Potential Potential::gaussian_additive(ForwardModel model, Eigen::MatrixXd covariance, Eigen::VectorXd data) {
  const auto m = static_cast<Eigen::Index>(model.output_dim());
  if (covariance.rows() != m || covariance.cols() != m) throw std::invalid_argument("potential: covariance must be m x m");
  if (data.size() != m) throw std::invalid_argument("potential: data length must equal the model output dimension");
  if (!covariance.isApprox(covariance.transpose(), 1e-12)) throw std::invalid_argument("potential: covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("potential: covariance must be positive definite");
  return Potential(GaussianAdditive{std::move(model), std::move(covariance), std::move(llt)}, std::move(data));
}

Potential Potential::gaussian_additive(ForwardModel model, double sigma2, Eigen::VectorXd data) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("potential: noise variance must be positive");
  const auto m = static_cast<Eigen::Index>(model.output_dim());
  return gaussian_additive(std::move(model), Eigen::MatrixXd::Identity(m, m) * sigma2, std::move(data));
}

Potential Potential::multiplicative_uniform(double data, std::size_t dim) {
  if (!(data > 0.0)) throw std::invalid_argument("potential: multiplicative data must be positive");
  if (dim == 0) throw std::invalid_argument("potential: dimension must be >= 1");
  return Potential(MultiplicativeUniform{dim}, Eigen::VectorXd::Constant(1, data));
}

Potential Potential::custom(std::function<double(std::span<const double>, const Eigen::VectorXd&)> fn, std::size_t dim,
                            Eigen::VectorXd data) {
  if (!fn) throw std::invalid_argument("potential: custom callback is empty");
  return Potential(Custom{std::move(fn), dim}, std::move(data));
}

std::size_t Potential::input_dim() const noexcept {
  return std::visit(overloaded{
                        [](const GaussianAdditive& g) { return g.model.input_dim(); },
                        [](const MultiplicativeUniform& m) { return m.dim; },
                        [](const Custom& c) { return c.dim; },
                    },
                    kind_);
}

double Potential::evaluate_full(std::span<const double> u) const {
  return std::visit(overloaded{
                        [&](const GaussianAdditive& g) {
                          const Eigen::VectorXd r = g.model.apply(u) - data_;
                          const Eigen::VectorXd z = g.cholesky.matrixL().solve(r);
                          return 0.5 * z.squaredNorm();
                        },
                        [&](const MultiplicativeUniform&) {
                          const double n = norm(u);
                          return n < data_(0) ? std::log(n) : kInf;
                        },
                        [&](const Custom& c) { return c.fn(u, data_); },
                    },
                    kind_);
}

double Potential::evaluate(std::span<const double> u) const {
  if (u.size() != input_dim()) throw std::invalid_argument("potential: coefficient length mismatch");
  if (!projection_level_ || kept_ >= u.size()) return evaluate_full(u);
  std::vector<double> projected(u.begin(), u.end());
  std::fill(projected.begin() + static_cast<long>(kept_), projected.end(), 0.0);
  return evaluate_full(projected);
}

Potential Potential::with_projection(const Basis& basis, std::size_t truncation) const {
  return with_projection(truncation, basis.coefficient_count(truncation));
}

Potential Potential::with_projection(std::size_t truncation, std::size_t kept) const {
  if (truncation == 0) throw std::invalid_argument("potential: projection level must be >= 1");
  if (kept > input_dim()) throw std::invalid_argument("cannot refine by projection");
  Potential p = *this;
  p.projection_level_ = truncation;
  p.kept_ = kept;
  return p;
}

Potential Potential::with_data(Eigen::VectorXd data) const {
  if (data.size() != data_.size()) throw std::invalid_argument("potential: data dimension mismatch");
  Potential p = *this;
  p.data_ = std::move(data);
  return p;
}

Eigen::VectorXd Potential::whiten(const Eigen::VectorXd& v) const {
  const auto* g = std::get_if<GaussianAdditive>(&kind_);
  if (!g) throw std::invalid_argument("whiten: only Gaussian-additive potentials carry a covariance");
  return g->cholesky.matrixL().solve(v);
}

bool AuditReport::flagged(const std::string& item) const {
  return std::any_of(violations.begin(), violations.end(), [&](const auto& v) { return v.item == item; });
}

AuditReport assumption_audit(const Potential& phi, double radius, std::size_t num_samples, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("assumption_audit: radius must be positive");
  AuditReport report;
  report.radius = radius;
  report.samples = num_samples;
  const std::size_t n = phi.input_dim();
  const std::size_t m = phi.data_dim();
  double min_phi = kInf;
  auto note = [&report](const char* item, std::string detail) {
    if (!report.flagged(item)) report.violations.push_back({item, std::move(detail)});
  };

  // (i) Lower bound: follow a geometric sequence u_k = 2^-(k+1) r d toward the origin.
  {
    CounterRng rng(derive_seed(seed, 0x11));
    const auto dir = uniform_on_sphere(rng, n, 1.0);
    std::vector<double> values;
    for (int k = 0; k <= 60; ++k) {
      std::vector<double> u(dir);
      for (double& x : u) x *= radius * std::ldexp(1.0, -(k + 1));
      values.push_back(phi.evaluate(u));
    }
    const bool minus_inf = std::any_of(values.begin(), values.end(), [](double v) { return v == -kInf || std::isnan(v); });
    const auto last = values.size() - 1;
    const double tail_slope = (values[last] - values[last - 10]) / 10.0;
    const bool diverging = std::isfinite(values[last]) && std::isfinite(values.front()) &&
                           values[last] < values.front() - 20.0 && tail_slope < -0.1;
    if (minus_inf || diverging) {
      report.lower_bound_ok = false;
      note("i", "Phi decreases without bound along u_k = 2^-k u_0 (last value " + std::to_string(values[last]) + ")");
    }
    for (double v : values) {
      if (std::isfinite(v)) min_phi = std::min(min_phi, v);
    }
  }

  for (std::size_t i = 0; i < num_samples; ++i) {
    CounterRng rng(sample_seed(seed, i));
    const auto u1 = uniform_in_ball(rng, n, radius);
    const auto u2 = uniform_in_ball(rng, n, radius);
    const auto y1 = uniform_in_ball(rng, m, radius);
    const auto y2 = uniform_in_ball(rng, m, radius);
    const Potential p1 = phi.with_data(to_vector(y1));
    const Potential p2 = phi.with_data(to_vector(y2));

    // (ii) Boundedness above on the r-ball in (u, y).
    const double a = p1.evaluate(u1);
    const double b = p2.evaluate(u1);
    for (double v : {a, b}) {
      if (std::isfinite(v)) {
        report.empirical_k_r = std::max(report.empirical_k_r, v);
        min_phi = std::min(min_phi, v);
      } else if (v > 0.0 || std::isnan(v)) {
        note("ii", "Phi is not finite at a point of the r-ball");
      } else {
        report.lower_bound_ok = false;
        note("i", "Phi = -infinity at a sampled point");
      }
    }

    // (iii) Continuity in u at the potential's own data.
    const double f1 = phi.evaluate(u1);
    const double f2 = phi.evaluate(u2);
    double du = 0.0;
    for (std::size_t p = 0; p < n; ++p) du += (u1[p] - u2[p]) * (u1[p] - u2[p]);
    du = std::sqrt(du);
    if (std::isfinite(f1) && std::isfinite(f2)) {
      if (du > 0.0) report.empirical_l_r = std::max(report.empirical_l_r, std::abs(f1 - f2) / du);
    } else {
      note("iii", "Phi jumps to a non-finite value inside the r-ball");
    }

    // (iv) Continuity in y with alpha_2 = 0.
    double dy = 0.0;
    for (std::size_t p = 0; p < m; ++p) dy += (y1[p] - y2[p]) * (y1[p] - y2[p]);
    dy = std::sqrt(dy);
    if (std::isfinite(a) && std::isfinite(b)) {
      if (dy > 0.0 && a != b) report.empirical_c = std::max(report.empirical_c, std::log(std::abs(a - b) / dy));
    } else {
      note("iv", "Phi(u; y) is not finite for some data in the r-ball");
    }
  }
  report.empirical_m = std::min(0.0, min_phi);
  return report;
}

PotentialGap potential_gap(const Potential& phi, const Basis& basis, std::size_t truncation,
                           std::span<const double> coefficients, double eps) {
  const Potential projected = phi.with_projection(basis, truncation);
  PotentialGap out;
  out.gap = std::abs(phi.evaluate(coefficients) - projected.evaluate(coefficients));
  const std::size_t kept = basis.coefficient_count(truncation);
  double tail = 0.0;
  for (std::size_t p = kept; p < coefficients.size(); ++p) tail += coefficients[p] * coefficients[p];
  out.tail_norm = std::sqrt(tail);
  if (out.tail_norm > 0.0) out.certificate_ratio = out.gap / (out.tail_norm * std::exp(eps * norm(coefficients)));
  return out;
}

nlohmann::json potential_to_json(const Potential& phi) {
  nlohmann::json j = std::visit(
      overloaded{
          [&](const Potential::GaussianAdditive& g) {
            nlohmann::json noise;
            const auto m = g.covariance.rows();
            const double s2 = g.covariance(0, 0);
            if (g.covariance.isApprox(Eigen::MatrixXd::Identity(m, m) * s2, 0.0)) {
              noise = {{"sigma2", s2}};
            } else {
              nlohmann::json rows = nlohmann::json::array();
              for (Eigen::Index i = 0; i < m; ++i) {
                std::vector<double> row(static_cast<std::size_t>(m));
                for (Eigen::Index k = 0; k < m; ++k) row[static_cast<std::size_t>(k)] = g.covariance(i, k);
                rows.push_back(row);
              }
              noise = {{"covariance", rows}};
            }
            std::vector<double> y(phi.data().data(), phi.data().data() + phi.data().size());
            return nlohmann::json{{"kind", "gaussian_additive"}, {"model", model_to_json(g.model)}, {"noise", noise}, {"y", y}};
          },
          [&](const Potential::MultiplicativeUniform& mu) {
            return nlohmann::json{{"kind", "multiplicative_uniform"}, {"y", phi.data()(0)}, {"dim", mu.dim}};
          },
          [](const Potential::Custom&) -> nlohmann::json {
            throw std::invalid_argument("potential_to_json: custom potentials are not serializable");
          },
      },
      phi.kind());
  if (phi.projection_level()) j["projection"] = {{"truncation", *phi.projection_level()}, {"kept", phi.projection_kept()}};
  return j;
}

Potential potential_from_json(const nlohmann::json& j) {
  const auto kind = j.value("kind", std::string("gaussian_additive"));
  std::optional<Potential> phi;
  if (kind == "gaussian_additive") {
    auto model = model_from_json(j.at("model"));
    const auto y = j.at("y").get<std::vector<double>>();
    const auto& noise = j.at("noise");
    if (noise.contains("sigma2")) {
      phi = Potential::gaussian_additive(std::move(model), noise.at("sigma2").get<double>(), to_vector(y));
    } else {
      const auto rows = noise.at("covariance").get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd cov(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw std::invalid_argument("potential_from_json: covariance must be square");
        for (std::size_t k = 0; k < rows.size(); ++k) cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
      }
      phi = Potential::gaussian_additive(std::move(model), std::move(cov), to_vector(y));
    }
  } else if (kind == "multiplicative_uniform") {
    phi = Potential::multiplicative_uniform(j.at("y").get<double>(), j.at("dim").get<std::size_t>());
  } else {
    throw std::invalid_argument("potential_from_json: unknown potential kind " + kind);
  }
  if (j.contains("projection")) {
    const auto& pr = j.at("projection");
    phi = phi->with_projection(pr.at("truncation").get<std::size_t>(), pr.at("kept").get<std::size_t>());
  }
  return *phi;
}

}  // namespace cbayes
