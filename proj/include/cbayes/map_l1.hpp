#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace cbayes {

/// 1/2 ||A z - y||^2 + (sigma^2 / lambda) ||z||_1, the negative log posterior
/// (up to constants) for Gaussian noise of variance sigma^2 and a Laplace(0, lambda) prior.
double l1_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double sigma, double lambda,
                    const Eigen::VectorXd& z);

/// The l1 weight sigma^2 / lambda used by the objective above.
double l1_weight(double sigma, double lambda);

double soft_threshold(double v, double t);

struct MapResult {
  Eigen::VectorXd minimizer;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;  ///< per iteration, when requested
};

/// Iterative soft thresholding with step 1/||A||_2^2, stopped once successive
/// iterates differ by less than tol (max norm). Throws std::runtime_error with
/// the last step size on non-convergence.
MapResult map_estimate_l1(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double sigma, double lambda, double tol,
                          std::size_t max_iterations = 1000000, bool record_trace = false);

/// Cyclic coordinate descent on the same objective; an independent cross-check
/// for map_estimate_l1. Stops when a full sweep moves no coordinate by more than tol.
MapResult lasso_coordinate_descent(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double sigma, double lambda,
                                   double tol, std::size_t max_sweeps = 1000000);

}  // namespace cbayes
