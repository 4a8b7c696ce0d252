#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copbp/model.hpp"
#include "copbp/optimize.hpp"
#include "copbp/table.hpp"

namespace copbp {

enum class BinaryLink { Probit, Logit };

/// One binary-outcome equation fitted on its own.
struct SingleEquationSpec {
  std::string outcome;
  std::vector<std::string> predictors;
  std::vector<SmoothDecl> smooths;
  BinaryLink link = BinaryLink::Probit;
};

/// The exogenous comparison model: logit of the conflict outcome on the eq2
/// predictors plus the treatment as an ordinary column, without smooths.
SingleEquationSpec baseline_spec(const ModelSpec& spec);

struct FitOptions {
  NewtonOptions newton;
  /// Grid for smoothing weights of smooths declared without a fixed lambda.
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4};
  std::optional<Eigen::VectorXd> start;
};

struct FitResult {
  std::string model;  // "joint", "probit" or "logit"
  std::vector<std::string> names;
  Eigen::VectorXd estimates;
  Eigen::MatrixXd vcov;
  double loglik = 0.0;  // without the smoothing penalty
  double penalized_loglik = 0.0;
  double max_abs_gradient = 0.0;
  bool info_positive_definite = false;
  int iterations = 0;
  bool converged = false;
  double aic = 0.0;
  double edf = 0.0;
  bool theta_at_boundary = false;  // copula parameter saturated its link
  std::string message;
  Eigen::Index n_obs = 0;
  std::uint64_t data_fingerprint = 0;
  std::vector<double> trace;

  // joint fits
  std::optional<ModelSpec> spec;
  std::optional<ModelLayout> layout;
  // single-equation fits
  std::optional<SingleEquationSpec> single_spec;
  std::optional<EquationDesign> design;

  Eigen::Index index_of(const std::string& name) const;
  ParamVector params() const;
  CopulaSpec fitted_copula() const;
};

/// FNV-1a hash of original row positions; ties fits to the rows they saw.
std::uint64_t row_fingerprint(const std::vector<Eigen::Index>& row_ids);

/// Joint penalized maximum likelihood. Numerical failure comes back as
/// converged = false, never as an exception.
FitResult fit(const PanelTable& data, const ModelSpec& spec, const FitOptions& options = {});

FitResult fit_single(const PanelTable& data, const SingleEquationSpec& spec, const FitOptions& options = {});

/// Logit fit of baseline_spec-style equations.
FitResult fit_baseline(const PanelTable& data, const SingleEquationSpec& outcome_spec,
                       const FitOptions& options = {});

struct ZStatistic {
  std::string name;
  double estimate = 0.0;
  std::optional<double> std_error;
  std::optional<double> z;  // absent when the information matrix is not PD
};

inline constexpr double kZCritical05 = 1.959963984540054;

std::vector<ZStatistic> z_statistics(const FitResult& fit);
std::optional<double> z_statistic(const FitResult& fit, const std::string& name);
/// Two-sided significance at level alpha.
bool significant(double z, double alpha = 0.05);

struct LrTestResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

double chi_square_sf(double x, double df);

/// Likelihood-ratio test of the instruments in the treatment equation alone.
LrTestResult instrument_strength_test(const PanelTable& data, const ModelSpec& spec,
                                      const FitOptions& options = {});

/// Predicted P(outcome = 1) from a single-equation fit.
Eigen::VectorXd predict_single(const FitResult& fit, const PanelTable& data);

}  // namespace copbp
