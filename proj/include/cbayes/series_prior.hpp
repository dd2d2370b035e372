#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cbayes/distribution.hpp"

namespace cbayes {

/// Integer frequency stored at enumeration position p of the circle basis.
/// Order: 0, -1, 1, -2, 2, ... so that the first 2N positions are exactly the
/// window {-N, ..., N-1}.
long fourier_index(std::size_t position) noexcept;
std::size_t fourier_position(long index) noexcept;

/// Real orthonormal trigonometric basis on the circle of circumference 1:
///   k = 0: 1,  k > 0: sqrt2 cos(2 pi k x),  k < 0: sqrt2 sin(2 pi |k| x).
double fourier_basis(long index, double x) noexcept;

class Basis {
 public:
  struct FourierCircle {};
  struct AbstractOrthonormal {
    std::function<double(std::size_t position, double x)> evaluate;
    double domain_lower = 0.0;
    double domain_upper = 1.0;
  };

  static Basis fourier_circle() { return Basis(FourierCircle{}); }
  static Basis abstract(std::function<double(std::size_t, double)> evaluate, double lower, double upper);

  bool is_fourier() const noexcept { return std::holds_alternative<FourierCircle>(kind_); }

  /// Coefficients stored for truncation level N: 2N on the circle, N otherwise.
  std::size_t coefficient_count(std::size_t truncation) const noexcept;
  /// Integer label of a position: the frequency on the circle, position + 1 otherwise.
  long index_at(std::size_t position) const noexcept;
  double evaluate(std::size_t position, double x) const;
  double domain_lower() const noexcept;
  double domain_upper() const noexcept;

 private:
  using Kind = std::variant<FourierCircle, AbstractOrthonormal>;
  explicit Basis(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

struct OrthonormalityReport {
  double max_norm_error = 0.0;
  double max_inner_product = 0.0;
  bool pass = true;
};

/// Quadrature check of ||x_k|| = 1 and <x_j, x_k> = 0 over the first `count` positions.
OrthonormalityReport check_orthonormality(const Basis& basis, std::size_t count, double tol = 1e-8);

/// Decay weights gamma_k.
class CoefficientSchedule {
 public:
  struct AlgebraicFourier {
    double s;
  };  ///< (1 + k^2)^(-s), k the integer index.
  struct AlgebraicSequence {
    double s;
  };  ///< k^(-s), k = position + 1.
  struct Explicit {
    std::vector<double> gammas;
  };  ///< by position; zero past the end of the list (finite series).

  using Form = std::variant<AlgebraicFourier, AlgebraicSequence, Explicit>;

  explicit CoefficientSchedule(Form form);
  static CoefficientSchedule algebraic_fourier(double s) { return CoefficientSchedule(AlgebraicFourier{s}); }
  static CoefficientSchedule algebraic_sequence(double s) { return CoefficientSchedule(AlgebraicSequence{s}); }
  static CoefficientSchedule explicit_list(std::vector<double> gammas) {
    return CoefficientSchedule(Explicit{std::move(gammas)});
  }

  const Form& form() const noexcept { return form_; }
  double gamma(const Basis& basis, std::size_t position) const noexcept;

 private:
  Form form_;
};

struct IidLaw {
  Distribution1D law;
};
/// Coefficient is scale * mode with independent scale ~ scale_law, mode ~ mode_law.
struct HierarchicalLaw {
  Distribution1D scale_law;
  Distribution1D mode_law;
};
using CoefficientLaw = std::variant<IidLaw, HierarchicalLaw>;

/// Law of u = c * sum_k gamma_k xi_k x_k with independent xi_k.
struct SeriesPrior {
  Basis basis = Basis::fourier_circle();
  CoefficientSchedule schedule = CoefficientSchedule::algebraic_fourier(1.25);
  CoefficientLaw law = IidLaw{Distribution1D::laplace(0.0, 1.0)};
  double dilation = 1.0;

  /// Throws std::invalid_argument unless dilation is in (0, 1].
  void validate() const;
  /// Per-position scale c * gamma_k.
  double scale_at(std::size_t position) const noexcept { return dilation * schedule.gamma(basis, position); }
};

/// Coefficients of P_N u in enumeration order. Coefficients outside the
/// window are zero and are not stored.
struct FieldSample {
  std::size_t truncation = 0;
  std::vector<double> coefficients;
  double norm_l2 = 0.0;
};

/// Draw of the unscaled coefficient variable (xi, or zeta * xi) at one position.
/// Each position owns the stream derive_seed(seed, position), so draws are
/// nested: raising the truncation never changes lower modes.
double draw_coefficient(const CoefficientLaw& law, std::uint64_t seed, std::size_t position) noexcept;

/// Fills out[p] = c gamma_p xi_p for p < out.size().
void sample_coefficients(const SeriesPrior& prior, std::uint64_t seed, std::span<double> out);

FieldSample sample_field(const SeriesPrior& prior, std::size_t truncation, std::uint64_t seed);

/// Field with every coefficient draw replaced by 1.
FieldSample deterministic_field(const SeriesPrior& prior, std::size_t truncation);

FieldSample make_field(std::size_t truncation, std::vector<double> coefficients);

/// P_M. Throws std::invalid_argument("cannot refine by projection") if M > N.
/// The coefficient count scales linearly with the truncation for every basis.
FieldSample project(const FieldSample& field, std::size_t truncation);

/// L2 distance; the shorter coefficient vector is zero-padded.
double distance_l2(const FieldSample& a, const FieldSample& b);

double evaluate_field(const Basis& basis, const FieldSample& field, double x);

/// Seed of the i-th independent sample in a Monte Carlo loop.
std::uint64_t sample_seed(std::uint64_t seed, std::size_t i) noexcept;

// --- diagnostics -----------------------------------------------------------

struct AdmissibilityReport {
  double gamma_partial_lp = 0.0;  ///< sum_{k<K} (gamma_k^2)^p, or the max when p is infinite
  double var_partial_lq = 0.0;    ///< sum_{k<K} (Var|xi_k|)^q, or the max when q is infinite
  bool gamma_cauchy = false;
  bool var_cauchy = false;
  bool pass = false;
  bool conjugate_ok = false;
  bool heuristic = true;  ///< a finite partial-sum test, never a proof
  std::size_t terms = 0;
};

/// Partial-sum test of {gamma_k^2} in l^p and {Var|xi_k|} in l^q.
/// A sequence counts as summable when the last doubling K/2 -> K adds less
/// than 1e-6 of the partial sum (for an infinite exponent: the sup stops growing).
AdmissibilityReport admissibility_check(const std::function<double(std::size_t)>& gamma_squared,
                                        const std::function<double(std::size_t)>& var_abs, double p, double q,
                                        std::size_t terms);
AdmissibilityReport admissibility_check(const SeriesPrior& prior, double p, double q, std::size_t terms);

struct ExpMomentReport {
  double estimate = 0.0;
  double std_error = 0.0;
  double doubling_drift = 0.0;  ///< |est(n) - est(n/2)| / est(n)
  bool saturated = false;       ///< exp overflowed for some sample
  bool stable = false;          ///< !saturated and drift below the tolerance
  std::size_t samples = 0;
  bool heuristic = true;
};

/// Monte Carlo estimate of E exp(eps ||P_N u||).
ExpMomentReport estimate_exp_moment(const SeriesPrior& prior, double eps, std::size_t truncation,
                                    std::size_t num_samples, std::uint64_t seed, double drift_tolerance = 0.02);

// --- serialization ---------------------------------------------------------

nlohmann::json prior_to_json(const SeriesPrior& prior);
SeriesPrior prior_from_json(const nlohmann::json& j);

/// CSV with header "index,coefficient"; index is the basis integer label.
void write_field_csv(std::ostream& out, const Basis& basis, const FieldSample& field);

}  // namespace cbayes
