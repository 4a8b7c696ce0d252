#include "copbp/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "copbp/margins.hpp"

namespace copbp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

double clamp_prob(double p) { return std::clamp(p, kUniformClamp, 1.0 - kUniformClamp); }

}  // namespace

// -------------------------------------------------------------- SmoothDecl ---

SmoothDecl parse_smooth(std::string_view text) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  const auto close = t.rfind(')');
  if (t.rfind("spline", 0) != 0 || open == std::string::npos || close == std::string::npos || close < open)
    throw SpecError("smooth declaration must look like spline(column, basis_dim): '" + t + "'");
  const std::string inner = t.substr(open + 1, close - open - 1);
  SmoothDecl d;
  const auto comma = inner.find(',');
  d.column = trim(inner.substr(0, comma));
  if (comma != std::string::npos) {
    try {
      d.basis_dim = std::stoi(trim(inner.substr(comma + 1)));
    } catch (const std::exception&) {
      throw SpecError("bad basis dimension in '" + t + "'");
    }
  }
  if (d.column.empty()) throw SpecError("smooth declaration without a column: '" + t + "'");
  if (d.basis_dim < 3) throw SpecError("basis_dim must be at least 3 in '" + t + "'");
  return d;
}

std::string to_string(const SmoothDecl& decl) {
  return "spline(" + decl.column + ", " + std::to_string(decl.basis_dim) + ")";
}

// --------------------------------------------------------------- ModelSpec ---

void ModelSpec::validate() const {
  if (treatment_outcome.empty() || conflict_outcome.empty()) throw SpecError("both outcomes must be named");
  if (treatment_outcome == conflict_outcome) throw SpecError("treatment and conflict outcomes must differ");
  for (const auto& z : instruments) {
    if (!contains(eq1_predictors, z)) throw SpecError("instrument '" + z + "' is not an eq1 predictor");
    if (contains(eq2_predictors, z))
      throw SpecError("instrument '" + z + "' appears in eq2 (exclusion restriction)");
  }
  if (contains(eq1_predictors, treatment_outcome)) throw SpecError("the treatment cannot predict itself in eq1");
  if (contains(eq2_predictors, treatment_outcome))
    throw SpecError("the treatment enters eq2 through gamma; do not list it as an eq2 predictor");
  for (const auto* eq : {&eq1_predictors, &eq2_predictors})
    if (contains(*eq, conflict_outcome)) throw SpecError("the conflict outcome cannot be a predictor");
  for (const auto* eq : {&eq1_predictors, &eq2_predictors}) {
    std::set<std::string> seen(eq->begin(), eq->end());
    if (seen.size() != eq->size()) throw SpecError("duplicate predictor column");
  }
  for (const auto& s : eq2_smooths)
    for (const auto& z : instruments)
      if (s.column == z) throw SpecError("instrument '" + z + "' smoothed in eq2 (exclusion restriction)");
}

std::vector<std::string> ModelSpec::modeling_columns() const {
  std::vector<std::string> out{treatment_outcome, conflict_outcome};
  auto add = [&](const std::string& c) {
    if (!contains(out, c)) out.push_back(c);
  };
  for (const auto& c : eq1_predictors) add(c);
  for (const auto& c : eq2_predictors) add(c);
  for (const auto& s : eq1_smooths) add(s.column);
  for (const auto& s : eq2_smooths) add(s.column);
  return out;
}

// ---------------------------------------------------------- EquationDesign ---

Eigen::Index EquationDesign::n_coefficients() const {
  Eigen::Index n = 1 + static_cast<Eigen::Index>(columns.size());
  for (const auto& s : smooths) n += s.n_coefficients();
  return n;
}

Eigen::MatrixXd EquationDesign::matrix(const PanelTable& table) const {
  Eigen::MatrixXd X(table.rows(), n_coefficients());
  X.col(0).setOnes();
  Eigen::Index k = 1;
  for (const auto& c : columns) X.col(k++) = table.column(c);
  for (const auto& s : smooths) {
    X.middleCols(k, s.n_coefficients()) = s.basis(table.column(s.column));
    k += s.n_coefficients();
  }
  return X;
}

std::vector<std::string> EquationDesign::coefficient_names(std::string_view prefix) const {
  const std::string p(prefix);
  std::vector<std::string> out{p + "(Intercept)"};
  for (const auto& c : columns) out.push_back(p + c);
  for (const auto& s : smooths)
    for (Eigen::Index j = 1; j <= s.n_coefficients(); ++j)
      out.push_back(p + "s(" + s.column + ")." + std::to_string(j));
  return out;
}

EquationDesign EquationDesign::build(const PanelTable& train, const std::vector<std::string>& columns,
                                     const std::vector<SmoothDecl>& smooths) {
  EquationDesign d;
  d.columns = columns;
  for (const auto& decl : smooths) {
    auto b = build_spline_basis(train.column(decl.column), decl.basis_dim, decl.column);
    b.term.lambda = decl.lambda.value_or(1.0);
    d.smooths.push_back(std::move(b.term));
  }
  return d;
}

// ------------------------------------------------------------- ModelLayout ---

std::vector<std::string> ModelLayout::coefficient_names() const {
  auto out = eq1.coefficient_names("eq1:");
  for (auto& n : eq2.coefficient_names("eq2:")) out.push_back(std::move(n));
  out.emplace_back("gamma");
  out.emplace_back("theta");
  return out;
}

Eigen::MatrixXd ModelLayout::penalty() const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(size(), size());
  auto place = [&](const EquationDesign& eq, Eigen::Index offset) {
    Eigen::Index k = offset + 1 + static_cast<Eigen::Index>(eq.columns.size());
    for (const auto& s : eq.smooths) {
      const Eigen::Index m = s.n_coefficients();
      S.block(k, k, m, m) = s.lambda * s.penalty;
      k += m;
    }
  };
  place(eq1, 0);
  place(eq2, p1());
  return S;
}

std::vector<SmoothTerm*> ModelLayout::smooth_terms() {
  std::vector<SmoothTerm*> out;
  for (auto& s : eq1.smooths) out.push_back(&s);
  for (auto& s : eq2.smooths) out.push_back(&s);
  return out;
}

std::vector<const SmoothTerm*> ModelLayout::smooth_terms() const {
  std::vector<const SmoothTerm*> out;
  for (const auto& s : eq1.smooths) out.push_back(&s);
  for (const auto& s : eq2.smooths) out.push_back(&s);
  return out;
}

ModelLayout build_layout(const PanelTable& train, const ModelSpec& spec) {
  spec.validate();
  return {EquationDesign::build(train, spec.eq1_predictors, spec.eq1_smooths),
          EquationDesign::build(train, spec.eq2_predictors, spec.eq2_smooths)};
}

// ------------------------------------------------------------- ParamVector ---

Eigen::VectorXd ParamVector::flatten() const {
  Eigen::VectorXd out(beta1.size() + beta2.size() + 2);
  out << beta1, beta2, gamma, theta_unconstrained;
  return out;
}

ParamVector ParamVector::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat, Eigen::Index p1, Eigen::Index p2) {
  if (flat.size() != p1 + p2 + 2) throw std::invalid_argument("ParamVector: length does not match the layout");
  return {flat.head(p1), flat.segment(p1, p2), flat[p1 + p2], flat[p1 + p2 + 1]};
}

// ------------------------------------------------------------------- cells ---

CellProbabilities cell_probabilities(const Copula& copula, double p1, double p2_treated, double p2_control) {
  p1 = clamp_prob(p1);
  p2_treated = clamp_prob(p2_treated);
  p2_control = clamp_prob(p2_control);
  const double c1 = copula.cdf(p1, p2_treated);
  const double c0 = copula.cdf(p1, p2_control);
  CellProbabilities out;
  out.p11 = c1;
  out.p10 = std::max(p1 - c1, 0.0);
  out.p01 = std::max(p2_control - c0, 0.0);
  out.p00 = std::max(1.0 - p1 - p2_control + c0, 0.0);
  return out;
}

CellProbabilities cell_probabilities_eta(const Copula& copula, double eta1, double eta2, double gamma) {
  return cell_probabilities(copula, probit(eta1), probit(eta2 + gamma), probit(eta2));
}

JointData make_joint_data(const PanelTable& table, const ModelSpec& spec, const ModelLayout& layout) {
  JointData d;
  d.y1 = table.column(spec.treatment_outcome);
  d.y2 = table.column(spec.conflict_outcome);
  for (Eigen::Index i = 0; i < d.y1.size(); ++i) {
    const bool ok1 = d.y1[i] == 0.0 || d.y1[i] == 1.0;
    const bool ok2 = d.y2[i] == 0.0 || d.y2[i] == 1.0;
    if (!ok1 || !ok2) throw SpecError("outcomes must be coded 0/1 (row " + std::to_string(i) + ")");
  }
  d.X1 = layout.eq1.matrix(table);
  d.X2 = layout.eq2.matrix(table);
  if (!d.X1.allFinite() || !d.X2.allFinite()) throw SpecError("design matrix has missing or non-finite values");
  d.row_ids = table.row_ids();
  return d;
}

// -------------------------------------------------------------- JointModel ---

JointModel::JointModel(JointData data, ModelLayout layout, CopulaSpec copula)
    : data_(std::move(data)), layout_(std::move(layout)), copula_(copula), penalty_(layout_.penalty()) {
  if (data_.rows() == 0) throw SpecError("joint model needs at least one row");
}

void JointModel::set_lambdas(const std::vector<double>& lambdas) {
  auto terms = layout_.smooth_terms();
  if (terms.size() != lambdas.size()) throw std::invalid_argument("set_lambdas: one lambda per smooth term");
  for (std::size_t j = 0; j < terms.size(); ++j) terms[j]->lambda = lambdas[j];
  penalty_ = layout_.penalty();
}

double JointModel::penalty_value(const Eigen::VectorXd& params) const {
  return 0.5 * params.dot(penalty_ * params);
}

double JointModel::evaluate(const Eigen::VectorXd& params, Eigen::VectorXd* grad, bool penalized) const {
  const Eigen::Index p1 = layout_.p1(), p2 = layout_.p2();
  if (params.size() != layout_.size()) throw std::invalid_argument("parameter vector has the wrong length");
  const double gamma = params[p1 + p2];
  const double t = params[p1 + p2 + 1];
  const Copula cop(copula_.family, copula_.rotation, link(t, copula_.family), copula_.df());

  const Eigen::VectorXd eta1 = data_.X1 * params.head(p1);
  const Eigen::VectorXd eta2 = data_.X2 * params.segment(p1, p2) + gamma * data_.y1;

  const Eigen::Index n = data_.rows();
  Eigen::VectorXd w1, w2;
  double wtheta = 0.0;
  if (grad) {
    w1.setZero(n);
    w2.setZero(n);
  }
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(eta1[i]) || !std::isfinite(eta2[i]))
      throw NonFiniteLikelihood("non-finite linear predictor at row " + std::to_string(i), i);
    const double a = clamp_prob(probit(eta1[i]));
    const double b = clamp_prob(probit(eta2[i]));
    const CopulaDerivatives c = cop.derivatives(a, b);
    const bool t1 = data_.y1[i] == 1.0;
    const bool t2 = data_.y2[i] == 1.0;
    double P, dPa, dPb, dPt;
    if (t1 && t2) {
      P = c.cdf, dPa = c.du, dPb = c.dv, dPt = c.dtheta;
    } else if (t1) {
      P = a - c.cdf, dPa = 1.0 - c.du, dPb = -c.dv, dPt = -c.dtheta;
    } else if (t2) {
      P = b - c.cdf, dPa = -c.du, dPb = 1.0 - c.dv, dPt = -c.dtheta;
    } else {
      P = 1.0 - a - b + c.cdf, dPa = c.du - 1.0, dPb = c.dv - 1.0, dPt = c.dtheta;
    }
    if (!std::isfinite(P))
      throw NonFiniteLikelihood("non-finite cell probability at row " + std::to_string(i), i);
    if (P < kCellFloor) {
      ll += std::log(kCellFloor);
      continue;
    }
    ll += std::log(P);
    if (grad) {
      w1[i] = dPa * normal_pdf(eta1[i]) / P;
      w2[i] = dPb * normal_pdf(eta2[i]) / P;
      wtheta += dPt / P;
    }
  }
  if (!std::isfinite(ll)) throw NonFiniteLikelihood("non-finite log-likelihood", -1);
  if (penalized) ll -= penalty_value(params);
  if (grad) {
    grad->resize(layout_.size());
    grad->head(p1) = data_.X1.transpose() * w1;
    grad->segment(p1, p2) = data_.X2.transpose() * w2;
    (*grad)[p1 + p2] = w2.dot(data_.y1);
    (*grad)[p1 + p2 + 1] = wtheta * link_derivative(t, copula_.family);
    if (penalized) *grad -= penalty_ * params;
  }
  return ll;
}

double JointModel::log_likelihood(const Eigen::VectorXd& params) const { return evaluate(params, nullptr, true); }

double JointModel::unpenalized_log_likelihood(const Eigen::VectorXd& params) const {
  return evaluate(params, nullptr, false);
}

Eigen::VectorXd JointModel::gradient(const Eigen::VectorXd& params) const {
  Eigen::VectorXd g;
  evaluate(params, &g, true);
  return g;
}

double JointModel::value_and_gradient(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const {
  return evaluate(params, &grad, true);
}

// ------------------------------------------------------------- prediction ---

PredictionMode parse_prediction_mode(std::string_view text) {
  if (text == "conditional") return PredictionMode::Conditional;
  if (text == "marginal") return PredictionMode::Marginal;
  throw SpecError("prediction mode must be 'conditional' or 'marginal'");
}

double predict_conflict_row(const Copula& copula, double eta1, double eta2, double gamma, double y1,
                            PredictionMode mode) {
  const double q = probit(eta2 + gamma * y1);
  if (mode == PredictionMode::Marginal) return q;
  const double p1 = clamp_prob(probit(eta1));
  const double qc = clamp_prob(q);
  double out;
  if (y1 == 1.0) {
    out = copula.cdf(p1, qc) / p1;
  } else {
    out = (qc - copula.cdf(p1, qc)) / (1.0 - p1);
  }
  return std::clamp(out, 0.0, 1.0);
}

Eigen::VectorXd predict_conflict(const Eigen::VectorXd& params, const JointData& data, const ModelLayout& layout,
                                 const CopulaSpec& copula, PredictionMode mode) {
  const auto pv = ParamVector::unflatten(params, layout.p1(), layout.p2());
  const Copula cop(copula.family, copula.rotation, link(pv.theta_unconstrained, copula.family), copula.df());
  const Eigen::VectorXd eta1 = data.X1 * pv.beta1;
  const Eigen::VectorXd eta2 = data.X2 * pv.beta2;
  Eigen::VectorXd out(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    out[i] = predict_conflict_row(cop, eta1[i], eta2[i], pv.gamma, data.y1[i], mode);
  return out;
}

}  // namespace copbp
