#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copbp/copula.hpp"
#include "copbp/estimator.hpp"

namespace copbp {

inline constexpr int kDefaultSimulations = 250;

struct AteResult {
  double point = 0.0;
  Eigen::VectorXd draws;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  int n_sims = 0;
  double alpha = 0.05;
  bool treated_only = false;  // ATT instead of ATE
};

struct AteOptions {
  int n_sims = kDefaultSimulations;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  bool treated_only = false;
};

/// mean over rows of Phi(eta2 + gamma) - Phi(eta2), eta2 without the treatment term.
double ate_point(const Eigen::Ref<const Eigen::VectorXd>& eta2, double gamma);

/// Average treatment effect of y1 on P(y2 = 1) with a percentile interval from
/// parameter draws N(estimates, vcov). Throws std::invalid_argument when the
/// fit is not converged or its covariance is not positive definite.
AteResult ate(const FitResult& fit, const PanelTable& data, const AteOptions& options = {});

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

struct SensitivityRecord {
  std::string copula;
  bool converged = false;
  bool info_positive_definite = false;
  double gamma = 0.0;
  std::optional<double> gamma_se;
  std::optional<double> gamma_z;
  std::optional<AteResult> ate;
  double loglik = 0.0;
  double aic = 0.0;
  std::string message;
};

struct SensitivityReport {
  std::vector<SensitivityRecord> records;  // sorted by gamma_z, failures last
};

/// Refits the model on the full sample once per copula.
SensitivityReport copula_sensitivity(const PanelTable& data, const ModelSpec& spec_template,
                                     const std::vector<CopulaSpec>& copulas, const AteOptions& ate_options = {},
                                     const FitOptions& fit_options = {});

}  // namespace copbp
