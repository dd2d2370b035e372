#include "cbayes/map_l1.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cbayes {

double l1_weight(double sigma, double lambda) { return sigma * sigma / lambda; }

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double l1_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double sigma, double lambda,
                    const Eigen::VectorXd& z) {
  return 0.5 * (a * z - y).squaredNorm() + l1_weight(sigma, lambda) * z.lpNorm<1>();
}

MapResult map_estimate_l1(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double sigma, double lambda, double tol,
                          std::size_t max_iterations, bool record_trace) {
  if (a.size() == 0 || !a.allFinite()) throw std::invalid_argument("map_estimate_l1: A must be non-empty and finite");
  if (y.size() != a.rows() || !y.allFinite()) throw std::invalid_argument("map_estimate_l1: y must match the rows of A");
  if (!(sigma > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("map_estimate_l1: sigma and lambda must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("map_estimate_l1: tol must be positive");

  const double tau = l1_weight(sigma, lambda);
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd aty = a.transpose() * y;
  // Largest eigenvalue of A^T A; zero only for A = 0, where any step works.
  const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = lip > 0.0 ? 1.0 / lip : 1.0;

  MapResult out;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd next(a.cols());
  double change = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    const Eigen::VectorXd grad = gram * z - aty;
    for (Eigen::Index i = 0; i < z.size(); ++i) next(i) = soft_threshold(z(i) - step * grad(i), step * tau);
    change = (next - z).lpNorm<Eigen::Infinity>();
    z.swap(next);
    if (record_trace) out.objective_trace.push_back(l1_objective(a, y, sigma, lambda, z));
    if (change < tol) {
      out.iterations = it;
      out.minimizer = z;
      out.objective = l1_objective(a, y, sigma, lambda, z);
      return out;
    }
  }
  std::ostringstream msg;
  msg << "map_estimate_l1: no convergence after " << max_iterations << " iterations (last step change " << change
      << ")";
  throw std::runtime_error(msg.str());
}

MapResult lasso_coordinate_descent(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double sigma, double lambda,
                                   double tol, std::size_t max_sweeps) {
  if (y.size() != a.rows()) throw std::invalid_argument("lasso_coordinate_descent: y must match the rows of A");
  const double tau = l1_weight(sigma, lambda);
  const Eigen::VectorXd col_sq = a.colwise().squaredNorm();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd residual = y;
  MapResult out;
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      if (col_sq(j) == 0.0) continue;
      const double rho = a.col(j).dot(residual) + col_sq(j) * z(j);
      const double zj = soft_threshold(rho, tau) / col_sq(j);
      const double d = zj - z(j);
      if (d != 0.0) {
        residual -= d * a.col(j);
        z(j) = zj;
        moved = std::max(moved, std::abs(d));
      }
    }
    if (moved < tol) {
      out.iterations = sweep;
      out.minimizer = z;
      out.objective = l1_objective(a, y, sigma, lambda, z);
      return out;
    }
  }
  throw std::runtime_error("lasso_coordinate_descent: no convergence");
}

}  // namespace cbayes
