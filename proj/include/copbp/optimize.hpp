#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace copbp {

/// Value of a smooth objective; fills `grad` when it is non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct NewtonOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-6;
  double max_step = 5.0;  // infinity-norm cap on a single Newton step
};

struct NewtonResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // central finite differences of the gradient at x
  bool converged = false;
  int iterations = 0;
  double max_abs_gradient = 0.0;
  std::string message;
  std::vector<double> trace;  // objective after every accepted step
};

/// Hessian by finite differences of the analytic gradient, symmetrized.
/// Step for coordinate i is step * max(1, |x_i|).
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double step = 1e-5, bool central = true);

/// Damped Newton ascent with backtracking line search. When the negative
/// Hessian does not factorize, a growing ridge is added until it does.
/// Never throws on numerical trouble: the result carries converged = false.
NewtonResult maximize_newton(const Objective& f, Eigen::VectorXd x0, const NewtonOptions& options = {});

}  // namespace copbp
