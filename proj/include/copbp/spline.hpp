#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace copbp {

struct DegenerateInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A centered cubic regression spline for one column.
///
/// The spline is parameterized by its values at `knots`; a sum-to-zero
/// constraint over the training rows removes one direction so the term can sit
/// next to an intercept. Evaluation outside the knot range extrapolates
/// linearly from the boundary knot.
struct SmoothTerm {
  std::string column;
  int basis_dim = 10;
  Eigen::VectorXd knots;
  Eigen::MatrixXd penalty;     // (basis_dim-1)^2, centered parameterization
  double lambda = 1.0;

  Eigen::MatrixXd knot_curvature;  // basis_dim^2: knot values -> second derivatives
  Eigen::MatrixXd constraint;      // basis_dim x (basis_dim-1)

  Eigen::Index n_coefficients() const { return basis_dim - 1; }

  Eigen::RowVectorXd evaluate(double x) const;
  Eigen::MatrixXd basis(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Same, before the centering constraint is applied (basis_dim columns).
  Eigen::RowVectorXd evaluate_uncentered(double x) const;
};

struct SplineBasis {
  Eigen::MatrixXd basis;
  Eigen::MatrixXd penalty;
  Eigen::VectorXd knots;
  SmoothTerm term;
};

/// Cubic regression spline basis with knots at quantiles of the distinct
/// values and a second-derivative penalty. Throws DegenerateInput when the
/// column has fewer than `basis_dim` distinct values.
SplineBasis build_spline_basis(const Eigen::Ref<const Eigen::VectorXd>& values, int basis_dim,
                               std::string column = {});

}  // namespace copbp
