#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cbayes/forward_model.hpp"
#include "cbayes/series_prior.hpp"

namespace cbayes {

/// Likelihood potential Phi(u; y), optionally composed with the projection P_N.
class Potential {
 public:
  /// 1/2 || Gamma^(-1/2) (G(u) - y) ||^2, whitening by Cholesky solve.
  struct GaussianAdditive {
    ForwardModel model;
    Eigen::MatrixXd covariance;
    Eigen::LLT<Eigen::MatrixXd> cholesky;
  };
  /// log ||u|| on ||u|| < y, +infinity otherwise (uniform multiplicative noise).
  struct MultiplicativeUniform {
    std::size_t dim;
  };
  struct Custom {
    std::function<double(std::span<const double> u, const Eigen::VectorXd& y)> fn;
    std::size_t dim;
  };

  static Potential gaussian_additive(ForwardModel model, Eigen::MatrixXd covariance, Eigen::VectorXd data);
  static Potential gaussian_additive(ForwardModel model, double sigma2, Eigen::VectorXd data);
  static Potential multiplicative_uniform(double data, std::size_t dim);
  static Potential custom(std::function<double(std::span<const double>, const Eigen::VectorXd&)> fn, std::size_t dim,
                          Eigen::VectorXd data = Eigen::VectorXd());

  double evaluate(std::span<const double> coefficients) const;

  /// Phi_N(u; y) = Phi(P_N u; y): coefficients beyond the level-N window are dropped.
  Potential with_projection(const Basis& basis, std::size_t truncation) const;
  /// Same, with the number of kept leading coefficients given directly.
  Potential with_projection(std::size_t truncation, std::size_t kept) const;
  Potential with_data(Eigen::VectorXd data) const;

  std::size_t input_dim() const noexcept;
  std::size_t data_dim() const noexcept { return static_cast<std::size_t>(data_.size()); }
  const Eigen::VectorXd& data() const noexcept { return data_; }
  std::optional<std::size_t> projection_level() const noexcept { return projection_level_; }
  std::size_t projection_kept() const noexcept { return kept_; }
  const std::variant<GaussianAdditive, MultiplicativeUniform, Custom>& kind() const noexcept { return kind_; }
  bool is_gaussian_additive() const noexcept { return std::holds_alternative<GaussianAdditive>(kind_); }

  /// Gamma^(-1/2) v for Gaussian-additive potentials (L^-1 v with Gamma = L L^T).
  Eigen::VectorXd whiten(const Eigen::VectorXd& v) const;

 private:
  using Kind = std::variant<GaussianAdditive, MultiplicativeUniform, Custom>;
  Potential(Kind kind, Eigen::VectorXd data) : kind_(std::move(kind)), data_(std::move(data)) {}
  double evaluate_full(std::span<const double> coefficients) const;

  Kind kind_;
  Eigen::VectorXd data_;
  std::optional<std::size_t> projection_level_;
  std::size_t kept_ = 0;  ///< leading coefficients kept under projection
};

struct AssumptionViolation {
  std::string item;  ///< "i", "ii", "iii" or "iv"
  std::string detail;
};

/// Sampling audit of the four potential conditions with alpha_1 = alpha_2 = 0.
/// It can exhibit violations but never certify the conditions.
struct AuditReport {
  bool lower_bound_ok = true;
  double empirical_m = 0.0;    ///< largest M <= 0 below every sampled Phi
  double empirical_k_r = 0.0;  ///< max Phi over u, y in the r-ball
  double empirical_l_r = 0.0;  ///< max |Phi(u1) - Phi(u2)| / ||u1 - u2|| at the potential's data
  double empirical_c = 0.0;    ///< log max |Phi(u; y1) - Phi(u; y2)| / ||y1 - y2||
  std::vector<AssumptionViolation> violations;
  std::size_t samples = 0;
  double radius = 0.0;

  bool flagged(const std::string& item) const;
};

AuditReport assumption_audit(const Potential& phi, double radius, std::size_t num_samples, std::uint64_t seed);

struct PotentialGap {
  double gap = 0.0;                ///< |Phi(u) - Phi(P_N u)|
  double tail_norm = 0.0;          ///< ||u - P_N u||
  double certificate_ratio = 0.0;  ///< gap / (tail_norm exp(eps ||u||)), 0 when the tail vanishes
};

PotentialGap potential_gap(const Potential& phi, const Basis& basis, std::size_t truncation,
                           std::span<const double> coefficients, double eps = 0.01);

/// {"model": {...}, "noise": {"sigma2": s} | {"covariance": [[...]]}, "y": [...]}
/// or {"kind": "multiplicative_uniform", "y": y, "dim": n}.
nlohmann::json potential_to_json(const Potential& phi);
Potential potential_from_json(const nlohmann::json& j);

}  // namespace cbayes
