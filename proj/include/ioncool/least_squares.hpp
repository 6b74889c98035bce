#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ioncool {

// Weighted residual vector r(p); the objective is chi2 = sum r_i^2.
using ResidualFunction = std::function<void(std::span<const double> params, std::span<double> residuals)>;

struct LeastSquaresProblem {
  std::size_t num_residuals = 0;
  ResidualFunction residuals;
  // Optional box bounds; empty means unbounded. Steps are projected onto the box.
  std::vector<double> lower;
  std::vector<double> upper;
};

struct LeastSquaresOptions {
  int max_iterations = 300;
  double ftol = 1e-13;   // relative chi2 decrease
  double xtol = 1e-12;   // relative step size
  double initial_lambda = 1e-3;
};

struct LeastSquaresResult {
  std::vector<double> params;
  std::vector<double> covariance;  // row-major, (J^T J)^+ at the solution
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
  std::string message;

  [[nodiscard]] double cov(std::size_t i, std::size_t j) const {
    return covariance[i * params.size() + j];
  }
};

// Damped Gauss-Newton (Marquardt scaling) with central-difference Jacobians.
[[nodiscard]] LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem,
                                                     std::vector<double> initial,
                                                     const LeastSquaresOptions& options = {});

}  // namespace ioncool
