#include "copbp/effects.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "copbp/margins.hpp"

namespace copbp {

namespace {

double mean_effect(const Eigen::VectorXd& eta2, double gamma, const std::vector<Eigen::Index>& rows) {
  double s = 0.0;
  for (auto i : rows) s += probit(eta2[i] + gamma) - probit(eta2[i]);
  return s / static_cast<double>(rows.size());
}

}  // namespace

double ate_point(const Eigen::Ref<const Eigen::VectorXd>& eta2, double gamma) {
  if (eta2.size() == 0) throw std::invalid_argument("ate_point: no rows");
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta2.size(); ++i) s += probit(eta2[i] + gamma) - probit(eta2[i]);
  return s / static_cast<double>(eta2.size());
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

AteResult ate(const FitResult& fit, const PanelTable& data, const AteOptions& options) {
  if (!fit.layout || !fit.spec) throw std::invalid_argument("ate: needs a joint fit");
  if (!fit.converged) throw std::invalid_argument("ate: fit did not converge");
  if (!fit.info_positive_definite)
    throw std::invalid_argument("ate: covariance is not positive definite, cannot simulate");
  if (options.n_sims < 1) throw std::invalid_argument("ate: n_sims must be positive");

  const ModelLayout& lay = *fit.layout;
  const Eigen::MatrixXd X2 = lay.eq2.matrix(data);
  const Eigen::VectorXd y1 = data.column(fit.spec->treatment_outcome);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    if (!options.treated_only || y1[i] == 1.0) rows.push_back(i);
  if (rows.empty()) throw std::invalid_argument("ate: no rows to average over");

  const Eigen::Index p1 = lay.p1(), p2 = lay.p2();
  AteResult out;
  out.n_sims = options.n_sims;
  out.alpha = options.alpha;
  out.treated_only = options.treated_only;
  out.point = mean_effect(X2 * fit.estimates.segment(p1, p2), fit.estimates[lay.gamma_index()], rows);

  Eigen::LLT<Eigen::MatrixXd> llt(fit.vcov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("ate: covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::Index p = fit.estimates.size();

  out.draws.resize(options.n_sims);
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(options.n_sims));
  for (int s = 0; s < options.n_sims; ++s) {
    // One engine per draw keyed on (seed, index): draws do not depend on order.
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed & 0xFFFFFFFFu),
                      static_cast<std::uint32_t>(options.seed >> 32), static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> norm;
    Eigen::VectorXd z(p);
    for (Eigen::Index j = 0; j < p; ++j) z[j] = norm(rng);
    const Eigen::VectorXd theta = fit.estimates + L * z;
    const double d = mean_effect(X2 * theta.segment(p1, p2), theta[lay.gamma_index()], rows);
    out.draws[s] = d;
    draws.push_back(d);
  }
  out.ci_lower = quantile(draws, options.alpha / 2.0);
  out.ci_upper = quantile(draws, 1.0 - options.alpha / 2.0);
  return out;
}

SensitivityReport copula_sensitivity(const PanelTable& data, const ModelSpec& spec_template,
                                     const std::vector<CopulaSpec>& copulas, const AteOptions& ate_options,
                                     const FitOptions& fit_options) {
  if (copulas.empty()) throw std::invalid_argument("copula_sensitivity: empty copula list");
  SensitivityReport rep;
  for (const auto& c : copulas) {
    ModelSpec spec = spec_template;
    spec.copula = c;
    SensitivityRecord rec;
    rec.copula = to_code(c);
    try {
      const FitResult f = fit(data, spec, fit_options);
      rec.converged = f.converged;
      rec.info_positive_definite = f.info_positive_definite;
      rec.loglik = f.loglik;
      rec.aic = f.aic;
      rec.message = f.message;
      const Eigen::Index g = f.layout->gamma_index();
      rec.gamma = f.estimates[g];
      if (f.info_positive_definite && f.vcov(g, g) > 0.0) {
        rec.gamma_se = std::sqrt(f.vcov(g, g));
        rec.gamma_z = rec.gamma / *rec.gamma_se;
      }
      if (f.converged && f.info_positive_definite) rec.ate = ate(f, data, ate_options);
    } catch (const std::exception& e) {
      rec.converged = false;
      rec.message = e.what();
    }
    rep.records.push_back(std::move(rec));
  }
  std::stable_sort(rep.records.begin(), rep.records.end(), [](const SensitivityRecord& a, const SensitivityRecord& b) {
    const bool ua = a.converged && a.gamma_z.has_value();
    const bool ub = b.converged && b.gamma_z.has_value();
    if (ua != ub) return ua;
    if (!ua) return false;
    return *a.gamma_z < *b.gamma_z;
  });
  return rep;
}

}  // namespace copbp
