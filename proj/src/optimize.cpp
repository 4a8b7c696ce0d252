#include "copbp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace copbp {

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double step, bool central) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd H(p, p);
  Eigen::VectorXd g0, gp, gm;
  if (!central) f(x, &g0);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x;
    xp[i] += h;
    f(xp, &gp);
    if (central) {
      Eigen::VectorXd xm = x;
      xm[i] -= h;
      f(xm, &gm);
      H.col(i) = (gp - gm) / (2.0 * h);
    } else {
      H.col(i) = (gp - g0) / h;
    }
  }
  return 0.5 * (H + H.transpose());
}

namespace {

bool safe_eval(const Objective& f, const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad) {
  try {
    value = f(x, &grad);
  } catch (const std::runtime_error&) {
    return false;
  } catch (const std::domain_error&) {
    return false;
  }
  return std::isfinite(value) && grad.allFinite();
}

}  // namespace

NewtonResult maximize_newton(const Objective& f, Eigen::VectorXd x0, const NewtonOptions& options) {
  NewtonResult res;
  res.x = std::move(x0);
  if (!safe_eval(f, res.x, res.value, res.gradient)) {
    res.message = "objective not finite at the starting point";
    res.max_abs_gradient = std::numeric_limits<double>::infinity();
    return res;
  }
  res.trace.push_back(res.value);

  const Eigen::Index p = res.x.size();
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    res.max_abs_gradient = res.gradient.cwiseAbs().maxCoeff();
    if (res.max_abs_gradient < options.gradient_tolerance) {
      res.converged = true;
      break;
    }
    Eigen::MatrixXd A;
    try {
      A = -fd_hessian(f, res.x, 1e-5, false);
    } catch (const std::exception&) {
      A = Eigen::MatrixXd::Identity(p, p);
    }
    if (!A.allFinite()) A = Eigen::MatrixXd::Identity(p, p);

    Eigen::LLT<Eigen::MatrixXd> llt(A);
    double ridge = 1e-8 * (1.0 + A.diagonal().cwiseAbs().maxCoeff());
    while (llt.info() != Eigen::Success) {
      llt.compute(A + ridge * Eigen::MatrixXd::Identity(p, p));
      ridge *= 10.0;
      if (!std::isfinite(ridge)) break;
    }
    Eigen::VectorXd dir = llt.solve(res.gradient);
    if (!dir.allFinite()) dir = res.gradient;
    const double big = dir.cwiseAbs().maxCoeff();
    if (big > options.max_step) dir *= options.max_step / big;

    const double slope = res.gradient.dot(dir);
    const double noise = 1e-11 * (1.0 + std::abs(res.value));
    bool accepted = false;
    double step = 1.0;
    for (int k = 0; k < 50 && !accepted; ++k, step *= 0.5) {
      const Eigen::VectorXd trial = res.x + step * dir;
      double v;
      Eigen::VectorXd g;
      if (!safe_eval(f, trial, v, g)) continue;
      const bool armijo = v >= res.value + 1e-4 * step * slope;
      // Below rounding level the objective cannot confirm progress; take the
      // step if it does not lose more than noise and shrinks the gradient.
      const bool flat = step * slope < noise && v >= res.value - noise &&
                        g.cwiseAbs().maxCoeff() < res.gradient.cwiseAbs().maxCoeff();
      if (armijo || flat) {
        res.x = trial;
        res.value = v;
        res.gradient = g;
        res.trace.push_back(v);
        accepted = true;
      }
    }
    if (!accepted) {
      res.message = "line search failed: step size underflow";
      break;
    }
  }
  res.max_abs_gradient = res.gradient.cwiseAbs().maxCoeff();
  if (!res.converged && res.max_abs_gradient < options.gradient_tolerance) res.converged = true;
  if (!res.converged && res.message.empty()) res.message = "iteration limit reached";
  try {
    res.hessian = fd_hessian(f, res.x, 1e-5, true);
  } catch (const std::exception&) {
    res.hessian = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  }
  return res;
}

}  // namespace copbp
