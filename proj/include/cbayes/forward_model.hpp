#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace cbayes {

/// Fourier multipliers of an even, real convolution kernel g on the circle:
/// g * e_k = m(|k|) e_k. Even kernels map the cosine/sine pair of frequency
/// |k| to itself, so the operator stays diagonal on the real basis.
class Kernel {
 public:
  struct Explicit {
    std::vector<double> multipliers;
  };  ///< m(|k|) by |k|, zero past the end.
  struct Algebraic {
    double s;
  };  ///< (1 + k^2)^(-s).
  struct GaussianSmoothing {
    double bandwidth;
  };  ///< exp(-k^2 / (2 bandwidth^2)), a heat kernel.

  using Form = std::variant<Explicit, Algebraic, GaussianSmoothing>;

  explicit Kernel(Form form);
  static Kernel algebraic(double s) { return Kernel(Algebraic{s}); }
  static Kernel gaussian(double bandwidth) { return Kernel(GaussianSmoothing{bandwidth}); }
  static Kernel explicit_multipliers(std::vector<double> m) { return Kernel(Explicit{std::move(m)}); }

  double multiplier(long index) const noexcept;
  const Form& form() const noexcept { return form_; }

 private:
  Form form_;
};

/// Equispaced observation points j/m, j = 0..m-1.
std::vector<double> equispaced_points(std::size_t m);

/// Parameter-to-observation map on coefficient vectors.
class ForwardModel {
 public:
  struct Linear {
    Eigen::MatrixXd matrix;
  };
  /// u -> (g * u)(x_j) for a band-limited u in the window {-N, ..., N-1}.
  struct Deconvolution {
    Kernel kernel;
    std::vector<double> observation_points;
    std::size_t truncation;
    std::optional<std::size_t> band_limit;  ///< multipliers zeroed outside {-M, ..., M-1}
  };

  static ForwardModel linear(Eigen::MatrixXd matrix);
  static ForwardModel deconvolution(Kernel kernel, std::vector<double> observation_points, std::size_t truncation);

  const std::variant<Linear, Deconvolution>& kind() const noexcept { return kind_; }
  bool is_deconvolution() const noexcept { return std::holds_alternative<Deconvolution>(kind_); }

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(matrix_.cols()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

  /// Dense matrix representation; for deconvolution entry (j, p) is
  /// m(k_p) x_{k_p}(point_j).
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

  /// Throws std::invalid_argument on a length mismatch.
  Eigen::VectorXd apply(std::span<const double> coefficients) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& coefficients) const;

  /// Deconvolution with multipliers cut to the window of level M (same input size).
  ForwardModel with_band_limit(std::size_t truncation) const;

  /// Frobenius norm of the matrix: an upper bound on the operator norm.
  double operator_norm_bound() const noexcept { return matrix_.norm(); }

 private:
  explicit ForwardModel(std::variant<Linear, Deconvolution> kind);
  std::variant<Linear, Deconvolution> kind_;
  Eigen::MatrixXd matrix_;
};

struct LipschitzProbeReport {
  double empirical_k = 0.0;
  std::size_t pairs = 0;
};

/// max ||G(u1) - G(u2)|| / ||u1 - u2|| over random pairs in the radius-r ball.
LipschitzProbeReport lipschitz_probe(const ForwardModel& model, double radius, std::size_t num_pairs, std::uint64_t seed);

struct BoundProbeReport {
  double empirical_m = 0.0;
  std::size_t samples = 0;
  std::size_t skipped = 0;  ///< samples with G(u) = 0
};

/// max log ||G(u)|| - eps ||u|| over random u on the sphere of the given radius.
BoundProbeReport bound_probe(const ForwardModel& model, double eps, std::size_t num_samples, std::uint64_t seed,
                             double radius = 1.0);

nlohmann::json model_to_json(const ForwardModel& model);
ForwardModel model_from_json(const nlohmann::json& j);

}  // namespace cbayes
