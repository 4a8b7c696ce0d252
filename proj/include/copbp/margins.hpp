#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copbp/spline.hpp"

namespace copbp {

/// Standard normal CDF.
double probit(double eta);

/// Standard normal quantile. Throws std::domain_error unless 0 < p < 1.
double probit_inv(double p);

double normal_pdf(double x);

/// log(probit(eta)) without underflow for very negative eta.
double log_probit(double eta);

struct MissingColumn : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// A named observation: column id -> value.
using Row = std::map<std::string, double, std::less<>>;

/// Intercept, parametric columns and smooth terms of one equation.
///
/// Coefficients are laid out as [intercept, parametric..., smooth blocks...].
struct LinearPredictor {
  std::vector<std::string> design_columns;
  Eigen::VectorXd coefficients;
  std::vector<SmoothTerm> smooth_terms;

  Eigen::Index expected_size() const;
};

double eta(const LinearPredictor& lp, const Row& row);

}  // namespace copbp
