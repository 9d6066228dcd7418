#pragma once

#include <Eigen/Dense>
#include <functional>

namespace spdcsim {

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free simplex minimizer. `steps` sets the initial simplex extent
// per coordinate. Stops when the simplex value spread falls below tol.
OptimResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                        double tol = 1e-12, int max_iter = 2000);

// Quasi-Newton minimizer with analytic gradient and Armijo backtracking.
// Stops when the per-iteration improvement drops below improvement_tol.
OptimResult bfgs(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
                 const Eigen::VectorXd& x0, double improvement_tol = 1e-10,
                 int max_iter = 100000);

} // namespace spdcsim
