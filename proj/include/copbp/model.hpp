#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "copbp/copula.hpp"
#include "copbp/spline.hpp"
#include "copbp/table.hpp"

namespace copbp {

struct SpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteLikelihood : std::runtime_error {
  NonFiniteLikelihood(const std::string& what, Eigen::Index row_index)
      : std::runtime_error(what), row(row_index) {}
  Eigen::Index row;
};

/// A smooth declaration, written `spline(column, basis_dim)` in configs.
/// Without a fixed lambda the estimator selects one by AIC.
struct SmoothDecl {
  std::string column;
  int basis_dim = 10;
  std::optional<double> lambda;
};

SmoothDecl parse_smooth(std::string_view text);
std::string to_string(const SmoothDecl& decl);

/// Two-equation recursive design. The treatment enters the conflict equation
/// through its own coefficient (gamma) and is never listed as an eq2 predictor.
struct ModelSpec {
  std::string treatment_outcome;
  std::string conflict_outcome;
  std::vector<std::string> eq1_predictors;  // includes the instruments
  std::vector<std::string> eq2_predictors;
  std::vector<std::string> instruments;
  std::vector<SmoothDecl> eq1_smooths;
  std::vector<SmoothDecl> eq2_smooths;
  CopulaSpec copula;

  /// Throws SpecError when the exclusion restriction or role rules fail.
  void validate() const;
  std::vector<std::string> modeling_columns() const;
};

/// Intercept, parametric columns and fitted smooth terms of one equation.
struct EquationDesign {
  std::vector<std::string> columns;
  std::vector<SmoothTerm> smooths;

  Eigen::Index n_coefficients() const;
  Eigen::MatrixXd matrix(const PanelTable& table) const;
  std::vector<std::string> coefficient_names(std::string_view prefix) const;

  /// Knots and centering come from `train`.
  static EquationDesign build(const PanelTable& train, const std::vector<std::string>& columns,
                              const std::vector<SmoothDecl>& smooths);
};

/// Flat parameter layout: [beta1 (p1) | beta2 (p2) | gamma | theta_unconstrained].
struct ModelLayout {
  EquationDesign eq1;
  EquationDesign eq2;

  Eigen::Index p1() const { return eq1.n_coefficients(); }
  Eigen::Index p2() const { return eq2.n_coefficients(); }
  Eigen::Index gamma_index() const { return p1() + p2(); }
  Eigen::Index theta_index() const { return p1() + p2() + 1; }
  Eigen::Index size() const { return p1() + p2() + 2; }

  std::vector<std::string> coefficient_names() const;
  /// Block-diagonal penalty sum_j lambda_j S_j embedded in the flat layout.
  Eigen::MatrixXd penalty() const;
  /// All smooth terms of both equations, eq1 first.
  std::vector<SmoothTerm*> smooth_terms();
  std::vector<const SmoothTerm*> smooth_terms() const;
};

ModelLayout build_layout(const PanelTable& train, const ModelSpec& spec);

struct ParamVector {
  Eigen::VectorXd beta1;
  Eigen::VectorXd beta2;
  double gamma = 0.0;
  double theta_unconstrained = 0.0;

  Eigen::VectorXd flatten() const;
  static ParamVector unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat, Eigen::Index p1, Eigen::Index p2);
};

struct CellProbabilities {
  double p11 = 0.0, p10 = 0.0, p01 = 0.0, p00 = 0.0;
  double sum() const { return p11 + p10 + p01 + p00; }
};

inline constexpr double kCellFloor = 1e-12;

/// Cells from the marginal success probabilities p1 = P(y1 = 1) and
/// p2_treated / p2_control = P(y2 = 1) at y1 = 1 / 0.
CellProbabilities cell_probabilities(const Copula& copula, double p1, double p2_treated, double p2_control);

/// Same, from linear predictors. `eta2` excludes the treatment term.
CellProbabilities cell_probabilities_eta(const Copula& copula, double eta1, double eta2, double gamma);

/// Model matrices for one data set under a fixed layout.
struct JointData {
  Eigen::VectorXd y1;
  Eigen::VectorXd y2;
  Eigen::MatrixXd X1;
  Eigen::MatrixXd X2;
  std::vector<Eigen::Index> row_ids;

  Eigen::Index rows() const { return y1.size(); }
};

JointData make_joint_data(const PanelTable& table, const ModelSpec& spec, const ModelLayout& layout);

/// Penalized log-likelihood of the recursive copula bivariate probit.
class JointModel {
 public:
  JointModel(JointData data, ModelLayout layout, CopulaSpec copula);

  const JointData& data() const { return data_; }
  const ModelLayout& layout() const { return layout_; }
  ModelLayout& layout() { return layout_; }
  const CopulaSpec& copula() const { return copula_; }

  double log_likelihood(const Eigen::VectorXd& params) const;
  double unpenalized_log_likelihood(const Eigen::VectorXd& params) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& params) const;
  double value_and_gradient(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const;
  double penalty_value(const Eigen::VectorXd& params) const;

  /// One lambda per smooth term, eq1 terms first.
  void set_lambdas(const std::vector<double>& lambdas);

 private:
  double evaluate(const Eigen::VectorXd& params, Eigen::VectorXd* grad, bool penalized) const;

  JointData data_;
  ModelLayout layout_;
  CopulaSpec copula_;
  Eigen::MatrixXd penalty_;
};

enum class PredictionMode { Conditional, Marginal };

PredictionMode parse_prediction_mode(std::string_view text);

/// P(y2 = 1 | observed y1) per row: conditional mode divides copula cells by the
/// treatment margin, marginal mode returns Phi(eta2) at the observed y1.
Eigen::VectorXd predict_conflict(const Eigen::VectorXd& params, const JointData& data, const ModelLayout& layout,
                                 const CopulaSpec& copula, PredictionMode mode);

double predict_conflict_row(const Copula& copula, double eta1, double eta2, double gamma, double y1,
                            PredictionMode mode);

}  // namespace copbp
