#include "copbp/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "copbp/margins.hpp"

namespace copbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd equation_penalty(const EquationDesign& eq) {
  const Eigen::Index p = eq.n_coefficients();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  Eigen::Index k = 1 + static_cast<Eigen::Index>(eq.columns.size());
  for (const auto& s : eq.smooths) {
    const Eigen::Index m = s.n_coefficients();
    S.block(k, k, m, m) = s.lambda * s.penalty;
    k += m;
  }
  return S;
}

// Penalized log-likelihood of a single binary regression.
double binary_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, BinaryLink link,
                        const Eigen::MatrixXd& S, const Eigen::VectorXd& beta, Eigen::VectorXd* grad) {
  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd w(eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    if (link == BinaryLink::Logit) {
      const double l1p = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      ll += y[i] * e - l1p;
      const double prob = e > 0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
      w[i] = y[i] - prob;
    } else {
      const double s = y[i] == 1.0 ? e : -e;
      const double lp = log_probit(s);
      ll += lp;
      const double mills = std::exp(-0.5 * s * s - 0.5 * std::log(2.0 * M_PI) - lp);
      w[i] = (y[i] == 1.0 ? 1.0 : -1.0) * mills;
    }
  }
  ll -= 0.5 * beta.dot(S * beta);
  if (grad) *grad = X.transpose() * w - S * beta;
  return ll;
}

NewtonResult fit_binary_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, BinaryLink link,
                               const Eigen::MatrixXd& S, Eigen::VectorXd start, const NewtonOptions& opt) {
  Objective f = [&](const Eigen::VectorXd& b, Eigen::VectorXd* g) { return binary_objective(X, y, link, S, b, g); };
  return maximize_newton(f, std::move(start), opt);
}

// Covariance, PD flag, EDF and AIC from the penalized Hessian at the optimum.
void finalize(FitResult& out, const NewtonResult& res, const Eigen::MatrixXd& S, double unpenalized) {
  const Eigen::Index p = res.x.size();
  out.estimates = res.x;
  out.converged = res.converged;
  out.iterations = res.iterations;
  out.max_abs_gradient = res.max_abs_gradient;
  out.penalized_loglik = res.value;
  out.loglik = unpenalized;
  out.message = res.message;
  out.trace = res.trace;
  const Eigen::MatrixXd A = -res.hessian;
  out.info_positive_definite = false;
  if (A.allFinite()) {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success && (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
      out.info_positive_definite = true;
      out.vcov = llt.solve(Eigen::MatrixXd::Identity(p, p));
    } else {
      out.vcov = A.completeOrthogonalDecomposition().pseudoInverse();
    }
    out.vcov = 0.5 * (out.vcov + out.vcov.transpose()).eval();
  } else {
    out.vcov = Eigen::MatrixXd::Constant(p, p, kNaN);
  }
  out.edf = out.info_positive_definite ? static_cast<double>(p) - (out.vcov * S).trace() : static_cast<double>(p);
  out.aic = -2.0 * out.loglik + 2.0 * out.edf;
}

bool better_aic(const FitResult& cand, const std::optional<FitResult>& best) {
  if (!best) return true;
  if (cand.converged != best->converged) return cand.converged;
  return cand.aic < best->aic;
}

// Coordinate-wise AIC grid search over the free smoothing weights.
template <class FitOnce>
FitResult select_lambdas(std::vector<SmoothTerm*> terms, const std::vector<bool>& free, const FitOptions& options,
                         FitOnce&& fit_once) {
  const bool any_free = std::find(free.begin(), free.end(), true) != free.end();
  if (!any_free || options.lambda_grid.empty()) return fit_once(options.start);
  std::vector<double> lambdas;
  for (auto* t : terms) lambdas.push_back(t->lambda);
  std::optional<FitResult> best;
  std::vector<double> best_lambdas = lambdas;
  std::optional<Eigen::VectorXd> warm = options.start;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (!free[j]) continue;
    for (double lam : options.lambda_grid) {
      for (std::size_t k = 0; k < terms.size(); ++k) terms[k]->lambda = best_lambdas[k];
      terms[j]->lambda = lam;
      FitResult cand = fit_once(warm);
      if (better_aic(cand, best)) {
        best = std::move(cand);
        best_lambdas[j] = lam;
        if (best->estimates.allFinite()) warm = best->estimates;
      }
    }
  }
  for (std::size_t k = 0; k < terms.size(); ++k) terms[k]->lambda = best_lambdas[k];
  return fit_once(warm);
}

void check_separation(FitResult& out, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, BinaryLink link) {
  const Eigen::VectorXd eta = X * out.estimates;
  double worst = 1.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double s = y[i] == 1.0 ? eta[i] : -eta[i];
    const double p = link == BinaryLink::Logit ? 1.0 / (1.0 + std::exp(-s)) : probit(s);
    worst = std::min(worst, p);
  }
  if (worst > 1.0 - 1e-6) {
    out.converged = false;
    out.message = "complete separation: every fitted probability matches its label";
  }
}

}  // namespace

std::uint64_t row_fingerprint(const std::vector<Eigen::Index>& row_ids) {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto r : row_ids) {
    auto v = static_cast<std::uint64_t>(r);
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

SingleEquationSpec baseline_spec(const ModelSpec& spec) {
  SingleEquationSpec out;
  out.outcome = spec.conflict_outcome;
  out.predictors = spec.eq2_predictors;
  out.predictors.push_back(spec.treatment_outcome);
  out.link = BinaryLink::Logit;
  return out;
}

Eigen::Index FitResult::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no coefficient named '" + name + "'");
  return it - names.begin();
}

ParamVector FitResult::params() const {
  if (!layout) throw std::logic_error("params(): not a joint fit");
  return ParamVector::unflatten(estimates, layout->p1(), layout->p2());
}

CopulaSpec FitResult::fitted_copula() const {
  if (!spec || !layout) throw std::logic_error("fitted_copula(): not a joint fit");
  CopulaSpec c = spec->copula;
  c.theta_unconstrained = estimates[layout->theta_index()];
  return c;
}

FitResult fit(const PanelTable& data, const ModelSpec& spec, const FitOptions& options) {
  spec.validate();
  ModelLayout layout = build_layout(data, spec);
  JointModel model(make_joint_data(data, spec, layout), layout, spec.copula);

  std::vector<bool> free;
  for (const auto& d : spec.eq1_smooths) free.push_back(!d.lambda);
  for (const auto& d : spec.eq2_smooths) free.push_back(!d.lambda);

  auto fit_once = [&](const std::optional<Eigen::VectorXd>& start) {
    std::vector<double> lambdas;
    for (const auto* t : model.layout().smooth_terms()) lambdas.push_back(t->lambda);
    model.set_lambdas(lambdas);
    const ModelLayout& lay = model.layout();
    const JointData& jd = model.data();

    Eigen::VectorXd x0;
    if (start) {
      x0 = *start;
    } else {
      // Single-equation probits give the warm start; theta starts from the spec.
      NewtonOptions quick = options.newton;
      const Eigen::MatrixXd S = lay.penalty();
      auto r1 = fit_binary_matrix(jd.X1, jd.y1, BinaryLink::Probit, S.topLeftCorner(lay.p1(), lay.p1()),
                                  Eigen::VectorXd::Zero(lay.p1()), quick);
      Eigen::MatrixXd X2g(jd.rows(), lay.p2() + 1);
      X2g << jd.X2, jd.y1;
      Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(lay.p2() + 1, lay.p2() + 1);
      S2.topLeftCorner(lay.p2(), lay.p2()) = S.block(lay.p1(), lay.p1(), lay.p2(), lay.p2());
      auto r2 = fit_binary_matrix(X2g, jd.y2, BinaryLink::Probit, S2, Eigen::VectorXd::Zero(lay.p2() + 1), quick);
      x0.resize(lay.size());
      x0 << r1.x, r2.x, spec.copula.theta_unconstrained;
      if (!x0.allFinite()) x0.setZero();
    }
    Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      if (g) return model.value_and_gradient(x, *g);
      return model.log_likelihood(x);
    };
    NewtonResult res = maximize_newton(f, x0, options.newton);
    FitResult out;
    out.model = "joint";
    out.names = lay.coefficient_names();
    double unpen = kNaN;
    try {
      unpen = model.unpenalized_log_likelihood(res.x);
    } catch (const std::exception&) {
    }
    finalize(out, res, lay.penalty(), unpen);
    out.n_obs = jd.rows();
    out.data_fingerprint = row_fingerprint(jd.row_ids);
    out.spec = spec;
    out.spec->copula.theta_unconstrained = res.x[lay.theta_index()];
    out.theta_at_boundary = spec.copula.family != CopulaFamily::Frank && std::abs(res.x[lay.theta_index()]) > 15.0;
    out.layout = lay;
    return out;
  };

  return select_lambdas(model.layout().smooth_terms(), free, options, fit_once);
}

FitResult fit_single(const PanelTable& data, const SingleEquationSpec& spec, const FitOptions& options) {
  EquationDesign design = EquationDesign::build(data, spec.predictors, spec.smooths);
  const Eigen::MatrixXd X = design.matrix(data);
  const Eigen::VectorXd y = data.column(spec.outcome);
  if (!X.allFinite() || !y.allFinite()) throw SpecError("single-equation design has missing values");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0) throw SpecError("outcome '" + spec.outcome + "' must be coded 0/1");

  std::vector<SmoothTerm*> terms;
  for (auto& s : design.smooths) terms.push_back(&s);
  std::vector<bool> free;
  for (const auto& d : spec.smooths) free.push_back(!d.lambda);

  auto fit_once = [&](const std::optional<Eigen::VectorXd>& start) {
    const Eigen::MatrixXd S = equation_penalty(design);
    NewtonResult res = fit_binary_matrix(X, y, spec.link, S,
                                         start ? *start : Eigen::VectorXd::Zero(design.n_coefficients()),
                                         options.newton);
    FitResult out;
    out.model = spec.link == BinaryLink::Logit ? "logit" : "probit";
    out.names = design.coefficient_names("");
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(S.rows(), S.cols());
    finalize(out, res, S, binary_objective(X, y, spec.link, zero, res.x, nullptr));
    check_separation(out, X, y, spec.link);
    out.n_obs = data.rows();
    out.data_fingerprint = row_fingerprint(data.row_ids());
    out.single_spec = spec;
    out.design = design;
    return out;
  };
  return select_lambdas(terms, free, options, fit_once);
}

FitResult fit_baseline(const PanelTable& data, const SingleEquationSpec& outcome_spec, const FitOptions& options) {
  SingleEquationSpec s = outcome_spec;
  s.link = BinaryLink::Logit;
  return fit_single(data, s, options);
}

std::vector<ZStatistic> z_statistics(const FitResult& fit) {
  std::vector<ZStatistic> out;
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    ZStatistic z;
    z.name = fit.names[i];
    z.estimate = fit.estimates[k];
    const double var = fit.vcov.size() ? fit.vcov(k, k) : kNaN;
    if (fit.info_positive_definite && std::isfinite(var) && var > 0.0) {
      z.std_error = std::sqrt(var);
      z.z = z.estimate / *z.std_error;
    }
    out.push_back(z);
  }
  return out;
}

std::optional<double> z_statistic(const FitResult& fit, const std::string& name) {
  for (const auto& z : z_statistics(fit))
    if (z.name == name) return z.z;
  throw std::out_of_range("no coefficient named '" + name + "'");
}

bool significant(double z, double alpha) {
  if (alpha == 0.05) return std::abs(z) >= kZCritical05;
  return std::abs(z) >= -probit_inv(alpha / 2.0);
}

double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

LrTestResult instrument_strength_test(const PanelTable& data, const ModelSpec& spec, const FitOptions& options) {
  if (spec.instruments.empty()) throw SpecError("instrument_strength_test: no instruments declared");
  spec.validate();
  SingleEquationSpec full{spec.treatment_outcome, spec.eq1_predictors, spec.eq1_smooths, BinaryLink::Probit};
  const FitResult f_full = fit_single(data, full, options);

  SingleEquationSpec restricted = full;
  restricted.predictors.clear();
  for (const auto& c : spec.eq1_predictors)
    if (std::find(spec.instruments.begin(), spec.instruments.end(), c) == spec.instruments.end())
      restricted.predictors.push_back(c);
  // Reuse the smoothing weights chosen for the full model.
  for (std::size_t j = 0; j < restricted.smooths.size(); ++j)
    restricted.smooths[j].lambda = f_full.design->smooths[j].lambda;
  const FitResult f_restr = fit_single(data, restricted, options);

  LrTestResult out;
  out.df = static_cast<int>(spec.instruments.size());
  out.statistic = std::max(0.0, 2.0 * (f_full.loglik - f_restr.loglik));
  out.p_value = chi_square_sf(out.statistic, out.df);
  return out;
}

Eigen::VectorXd predict_single(const FitResult& fit, const PanelTable& data) {
  if (!fit.design || !fit.single_spec) throw std::logic_error("predict_single: not a single-equation fit");
  const Eigen::VectorXd eta = fit.design->matrix(data) * fit.estimates;
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    out[i] = fit.single_spec->link == BinaryLink::Logit ? 1.0 / (1.0 + std::exp(-eta[i])) : probit(eta[i]);
  return out;
}

}  // namespace copbp
