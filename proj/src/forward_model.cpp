#include "cbayes/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cbayes/random.hpp"
#include "cbayes/series_prior.hpp"

namespace cbayes {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Eigen::MatrixXd deconvolution_matrix(const ForwardModel::Deconvolution& d) {
  const std::size_t n = 2 * d.truncation;
  Eigen::MatrixXd g(static_cast<Eigen::Index>(d.observation_points.size()), static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < n; ++p) {
    const long k = fourier_index(p);
    const bool in_band = !d.band_limit || p < 2 * *d.band_limit;
    const double m = in_band ? d.kernel.multiplier(k) : 0.0;
    for (std::size_t j = 0; j < d.observation_points.size(); ++j) {
      g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) = m * fourier_basis(k, d.observation_points[j]);
    }
  }
  return g;
}

}  // namespace

Kernel::Kernel(Form form) : form_(std::move(form)) {
  std::visit(overloaded{
                 [](const Explicit& e) {
                   for (double m : e.multipliers) {
                     if (!std::isfinite(m)) throw std::invalid_argument("kernel: multipliers must be finite");
                   }
                 },
                 [](const Algebraic& a) {
                   if (!(a.s > 0.0)) throw std::invalid_argument("kernel: algebraic decay needs s > 0");
                 },
                 [](const GaussianSmoothing& g) {
                   if (!(g.bandwidth > 0.0)) throw std::invalid_argument("kernel: bandwidth must be positive");
                 },
             },
             form_);
}

double Kernel::multiplier(long index) const noexcept {
  const double k = static_cast<double>(index < 0 ? -index : index);
  return std::visit(overloaded{
                        [&](const Explicit& e) {
                          const auto a = static_cast<std::size_t>(k);
                          return a < e.multipliers.size() ? e.multipliers[a] : 0.0;
                        },
                        [&](const Algebraic& a) { return std::pow(1.0 + k * k, -a.s); },
                        [&](const GaussianSmoothing& g) { return std::exp(-0.5 * k * k / (g.bandwidth * g.bandwidth)); },
                    },
                    form_);
}

std::vector<double> equispaced_points(std::size_t m) {
  std::vector<double> x(m);
  for (std::size_t j = 0; j < m; ++j) x[j] = static_cast<double>(j) / static_cast<double>(m);
  return x;
}

ForwardModel::ForwardModel(std::variant<Linear, Deconvolution> kind) : kind_(std::move(kind)) {
  matrix_ = std::visit(overloaded{
                           [](const Linear& l) { return l.matrix; },
                           [](const Deconvolution& d) { return deconvolution_matrix(d); },
                       },
                       kind_);
}

ForwardModel ForwardModel::linear(Eigen::MatrixXd matrix) {
  if (matrix.size() == 0) throw std::invalid_argument("linear model: empty matrix");
  if (!matrix.allFinite()) throw std::invalid_argument("linear model: entries must be finite");
  return ForwardModel(Linear{std::move(matrix)});
}

ForwardModel ForwardModel::deconvolution(Kernel kernel, std::vector<double> points, std::size_t truncation) {
  if (truncation == 0) throw std::invalid_argument("deconvolution: truncation must be >= 1");
  if (points.empty()) throw std::invalid_argument("deconvolution: need observation points");
  auto sorted = points;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    if (!(sorted[j] >= 0.0 && sorted[j] < 1.0)) throw std::invalid_argument("deconvolution: points must lie in [0, 1)");
    if (j > 0 && sorted[j] == sorted[j - 1]) throw std::invalid_argument("deconvolution: points must be distinct");
  }
  return ForwardModel(Deconvolution{std::move(kernel), std::move(points), truncation, std::nullopt});
}

Eigen::VectorXd ForwardModel::apply(std::span<const double> coefficients) const {
  if (coefficients.size() != input_dim()) {
    throw std::invalid_argument("apply: expected " + std::to_string(input_dim()) + " coefficients, got " +
                                std::to_string(coefficients.size()));
  }
  return matrix_ * Eigen::Map<const Eigen::VectorXd>(coefficients.data(), static_cast<Eigen::Index>(coefficients.size()));
}

Eigen::VectorXd ForwardModel::apply(const Eigen::VectorXd& coefficients) const {
  return apply(std::span<const double>(coefficients.data(), static_cast<std::size_t>(coefficients.size())));
}

ForwardModel ForwardModel::with_band_limit(std::size_t truncation) const {
  const auto* d = std::get_if<Deconvolution>(&kind_);
  if (!d) throw std::invalid_argument("with_band_limit: only deconvolution models are band-limited");
  if (truncation > d->truncation) throw std::invalid_argument("with_band_limit: band exceeds the model window");
  auto copy = *d;
  copy.band_limit = truncation;
  return ForwardModel(std::move(copy));
}

LipschitzProbeReport lipschitz_probe(const ForwardModel& model, double radius, std::size_t num_pairs, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("lipschitz_probe: radius must be positive");
  LipschitzProbeReport report;
  const std::size_t n = model.input_dim();
  for (std::size_t i = 0; i < num_pairs; ++i) {
    CounterRng rng(sample_seed(seed, i));
    const auto u1 = uniform_in_ball(rng, n, radius);
    const auto u2 = uniform_in_ball(rng, n, radius);
    Eigen::VectorXd du(static_cast<Eigen::Index>(n));
    for (std::size_t p = 0; p < n; ++p) du(static_cast<Eigen::Index>(p)) = u1[p] - u2[p];
    const double denom = du.norm();
    if (denom == 0.0) continue;
    const double num = (model.apply(u1) - model.apply(u2)).norm();
    report.empirical_k = std::max(report.empirical_k, num / denom);
    ++report.pairs;
  }
  return report;
}

BoundProbeReport bound_probe(const ForwardModel& model, double eps, std::size_t num_samples, std::uint64_t seed,
                             double radius) {
  BoundProbeReport report;
  report.empirical_m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < num_samples; ++i) {
    CounterRng rng(sample_seed(seed, i));
    const auto u = uniform_on_sphere(rng, model.input_dim(), radius);
    const double g = model.apply(u).norm();
    if (g == 0.0) {
      ++report.skipped;
      continue;
    }
    report.empirical_m = std::max(report.empirical_m, std::log(g) - eps * radius);
    ++report.samples;
  }
  return report;
}

nlohmann::json model_to_json(const ForwardModel& model) {
  return std::visit(
      overloaded{
          [](const ForwardModel::Linear& l) {
            nlohmann::json rows = nlohmann::json::array();
            for (Eigen::Index i = 0; i < l.matrix.rows(); ++i) {
              std::vector<double> row(static_cast<std::size_t>(l.matrix.cols()));
              for (Eigen::Index j = 0; j < l.matrix.cols(); ++j) row[static_cast<std::size_t>(j)] = l.matrix(i, j);
              rows.push_back(row);
            }
            return nlohmann::json{{"kind", "linear"}, {"matrix", rows}};
          },
          [](const ForwardModel::Deconvolution& d) {
            nlohmann::json kernel = std::visit(
                overloaded{
                    [](const Kernel::Explicit& e) { return nlohmann::json{{"multipliers", e.multipliers}}; },
                    [](const Kernel::Algebraic& a) { return nlohmann::json{{"algebraic", a.s}}; },
                    [](const Kernel::GaussianSmoothing& g) { return nlohmann::json{{"gaussian", g.bandwidth}}; },
                },
                d.kernel.form());
            nlohmann::json j{{"kind", "deconvolution"},
                             {"kernel", kernel},
                             {"observation_points", d.observation_points},
                             {"truncation", d.truncation}};
            if (d.band_limit) j["band_limit"] = *d.band_limit;
            return j;
          },
      },
      model.kind());
}

ForwardModel model_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw std::invalid_argument("model_from_json: empty matrix");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) throw std::invalid_argument("model_from_json: ragged matrix");
      for (std::size_t k = 0; k < rows[i].size(); ++k) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return ForwardModel::linear(std::move(a));
  }
  if (kind == "deconvolution") {
    const auto& k = j.at("kernel");
    std::optional<Kernel> kernel;
    if (k.contains("multipliers")) {
      kernel = Kernel::explicit_multipliers(k.at("multipliers").get<std::vector<double>>());
    } else if (k.contains("algebraic")) {
      kernel = Kernel::algebraic(k.at("algebraic").get<double>());
    } else if (k.contains("gaussian")) {
      kernel = Kernel::gaussian(k.at("gaussian").get<double>());
    } else {
      throw std::invalid_argument("model_from_json: kernel needs multipliers, algebraic or gaussian");
    }
    const auto& pts = j.at("observation_points");
    auto points = pts.is_number_integer() ? equispaced_points(pts.get<std::size_t>()) : pts.get<std::vector<double>>();
    auto model = ForwardModel::deconvolution(*kernel, std::move(points), j.at("truncation").get<std::size_t>());
    if (j.contains("band_limit")) model = model.with_band_limit(j.at("band_limit").get<std::size_t>());
    return model;
  }
  throw std::invalid_argument("model_from_json: unknown model kind " + kind);
}

}  // namespace cbayes
