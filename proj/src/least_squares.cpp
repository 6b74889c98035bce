#include "ioncool/least_squares.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ioncool/error.hpp"

namespace ioncool {

namespace {

struct Evaluator {
  const LeastSquaresProblem& problem;
  std::size_t n;

  double lower(std::size_t j) const {
    return problem.lower.empty() ? -INFINITY : problem.lower[j];
  }
  double upper(std::size_t j) const {
    return problem.upper.empty() ? INFINITY : problem.upper[j];
  }
  void project(Eigen::VectorXd& p) const {
    for (std::size_t j = 0; j < n; ++j) {
      p[static_cast<Eigen::Index>(j)] =
          std::clamp(p[static_cast<Eigen::Index>(j)], lower(j), upper(j));
    }
  }
  Eigen::VectorXd residuals(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(problem.num_residuals));
    problem.residuals(std::span<const double>(p.data(), n),
                      std::span<double>(r.data(), problem.num_residuals));
    return r;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    const auto m = static_cast<Eigen::Index>(problem.num_residuals);
    Eigen::MatrixXd J(m, static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double h = 1e-6 * std::max(std::abs(p[jj]), 1e-2);
      Eigen::VectorXd plus = p, minus = p;
      double up = p[jj] + h, down = p[jj] - h;
      if (up > upper(j)) up = p[jj];
      if (down < lower(j)) down = p[jj];
      plus[jj] = up;
      minus[jj] = down;
      if (up == down) {
        J.col(jj).setZero();
        continue;
      }
      J.col(jj) = (residuals(plus) - residuals(minus)) / (up - down);
    }
    return J;
  }
};

}  // namespace

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem,
                                       std::vector<double> initial,
                                       const LeastSquaresOptions& options) {
  const std::size_t n = initial.size();
  if (n == 0 || problem.num_residuals < n) {
    throw PreconditionError("levenberg_marquardt: need at least as many residuals as parameters");
  }
  if ((!problem.lower.empty() && problem.lower.size() != n) ||
      (!problem.upper.empty() && problem.upper.size() != n)) {
    throw PreconditionError("levenberg_marquardt: bound vectors must match parameter count");
  }
  Evaluator ev{problem, n};
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(initial.data(), static_cast<Eigen::Index>(n));
  ev.project(p);
  Eigen::VectorXd r = ev.residuals(p);
  double chi2 = r.squaredNorm();
  if (!std::isfinite(chi2)) throw FitError("levenberg_marquardt: non-finite residuals at the start point");

  LeastSquaresResult res;
  double lambda = options.initial_lambda;
  Eigen::MatrixXd J;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    J = ev.jacobian(p);
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, chi2)) {
      res.converged = true;
      res.message = "gradient vanished";
      break;
    }
    Eigen::VectorXd diag = A.diagonal();
    const double dmax = std::max(diag.maxCoeff(), 1e-300);
    for (auto& d : diag) d = std::max(d, 1e-12 * dmax);

    bool accepted = false;
    bool done = false;
    while (!accepted) {
      Eigen::MatrixXd damped = A;
      damped.diagonal() += lambda * diag;
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      Eigen::VectorXd trial = p + step;
      ev.project(trial);
      const Eigen::VectorXd rt = ev.residuals(trial);
      const double chi2_trial = rt.squaredNorm();
      if (std::isfinite(chi2_trial) && chi2_trial < chi2) {
        const double decrease = chi2 - chi2_trial;
        const double dx = (trial - p).norm();
        p = trial;
        r = rt;
        chi2 = chi2_trial;
        lambda = std::max(lambda * 0.3, 1e-15);
        accepted = true;
        if (decrease <= options.ftol * chi2 || dx <= options.xtol * (p.norm() + options.xtol) ||
            chi2 <= 1e-300) {
          res.converged = true;
          res.message = "converged";
          done = true;
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No downhill step exists at machine precision: a local minimum.
          res.converged = true;
          res.message = "no further descent";
          done = true;
          break;
        }
      }
    }
    if (done) break;
  }
  if (!res.converged) res.message = "iteration limit reached";
  res.iterations = it + 1;

  J = ev.jacobian(p);
  const Eigen::MatrixXd A = J.transpose() * J;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  cod.setThreshold(1e-13);
  res.rank_deficient = cod.rank() < static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd cov = cod.pseudoInverse();
  res.params.assign(p.data(), p.data() + n);
  res.covariance.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      res.covariance[i * n + j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  res.chi2 = chi2;
  return res;
}

}  // namespace ioncool
