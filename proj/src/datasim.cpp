#include "copbp/datasim.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "copbp/margins.hpp"

namespace copbp {

namespace {

std::string indexed(char prefix, int i) { return std::string(1, prefix) + std::to_string(i + 1); }

double peace_curve(double peace) { return std::exp(-peace / 5.0); }

Eigen::VectorXd true_eta2(const DgpSpec& dgp, const PanelTable& data) {
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(data.rows(), dgp.beta2_true[0]);
  for (int j = 0; j < dgp.n_confounders(); ++j) eta += dgp.beta2_true[j + 1] * data.column(indexed('c', j));
  if (dgp.peace_effect != 0.0)
    eta += dgp.peace_effect * data.column("peace").unaryExpr([](double p) { return peace_curve(p); });
  return eta;
}

}  // namespace

void DgpSpec::validate() const {
  if (n_rows < 1) throw std::invalid_argument("DgpSpec: n_rows must be >= 1");
  if (beta1_true.size() < 1 || beta1_true.size() != beta2_true.size())
    throw std::invalid_argument("DgpSpec: beta1_true and beta2_true need the same length (intercept first)");
  if (n_instruments < 0) throw std::invalid_argument("DgpSpec: n_instruments must be >= 0");
  if (!(confounder_strength >= 0.0)) throw std::invalid_argument("DgpSpec: confounder_strength must be >= 0");
  Copula::from_spec(copula_true);  // throws on an invalid copula
}

std::pair<PanelTable, TruthRecord> generate(const DgpSpec& dgp) {
  dgp.validate();
  const Eigen::Index n = dgp.n_rows;
  const int k = dgp.n_confounders();
  const int m = dgp.n_instruments;
  const Copula cop = Copula::from_spec(dgp.copula_true);

  std::vector<std::string> names{"row_id", "dyad", "year", "treat", "conflict"};
  for (int j = 0; j < k; ++j) names.push_back(indexed('c', j));
  for (int j = 0; j < m; ++j) names.push_back(indexed('z', j));
  names.emplace_back("peace");
  Eigen::MatrixXd V(n, static_cast<Eigen::Index>(names.size()));

  std::mt19937_64 rng(dgp.seed);
  std::normal_distribution<double> norm;
  std::uniform_int_distribution<int> peace_draw(0, 30);
  const Eigen::Index n_dyads = std::max<Eigen::Index>(1, n / 10);
  for (Eigen::Index i = 0; i < n; ++i) {
    V(i, 0) = static_cast<double>(i);
    V(i, 1) = static_cast<double>(i % n_dyads);
    V(i, 2) = static_cast<double>(i / n_dyads);
    double eta1 = dgp.beta1_true[0];
    double eta2 = dgp.beta2_true[0];
    for (int j = 0; j < k; ++j) {
      const double c = dgp.confounder_strength * norm(rng);
      V(i, 5 + j) = c;
      eta1 += dgp.beta1_true[j + 1] * c;
      eta2 += dgp.beta2_true[j + 1] * c;
    }
    for (int j = 0; j < m; ++j) {
      const double z = norm(rng);
      V(i, 5 + k + j) = z;
      eta1 += dgp.instrument_strength * z;
    }
    const double peace = peace_draw(rng);
    V(i, 5 + k + m) = peace;
    eta2 += dgp.peace_effect * peace_curve(peace);
    const auto [u, v] = cop.sample(rng);
    const double y1 = u <= probit(eta1) ? 1.0 : 0.0;
    const double y2 = v <= probit(eta2 + dgp.gamma_true * y1) ? 1.0 : 0.0;
    V(i, 3) = y1;
    V(i, 4) = y2;
  }
  PanelTable table(names, std::move(V));

  TruthRecord truth;
  truth.dgp = dgp;
  truth.true_ate = true_ate(dgp, table);
  try {
    truth.kendall_tau = kendall_tau(dgp.copula_true);
  } catch (const InvalidParameter&) {
    truth.kendall_tau = std::numeric_limits<double>::quiet_NaN();
  }
  truth.treatment_prevalence = table.column("treat").mean();
  truth.outcome_prevalence = table.column("conflict").mean();
  return {std::move(table), truth};
}

double true_ate(const DgpSpec& dgp, const PanelTable& data) {
  const Eigen::VectorXd eta = true_eta2(dgp, data);
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += probit(eta[i] + dgp.gamma_true) - probit(eta[i]);
  return s / static_cast<double>(eta.size());
}

ModelSpec dgp_model_spec(const DgpSpec& dgp, bool peace_spline) {
  ModelSpec spec;
  spec.treatment_outcome = "treat";
  spec.conflict_outcome = "conflict";
  for (int j = 0; j < dgp.n_confounders(); ++j) {
    spec.eq1_predictors.push_back(indexed('c', j));
    spec.eq2_predictors.push_back(indexed('c', j));
  }
  for (int j = 0; j < dgp.n_instruments; ++j) {
    spec.eq1_predictors.push_back(indexed('z', j));
    spec.instruments.push_back(indexed('z', j));
  }
  if (peace_spline) spec.eq2_smooths.push_back({"peace", 10, std::nullopt});
  spec.copula = dgp.copula_true;
  spec.copula.theta_unconstrained = 0.0;
  return spec;
}

}  // namespace copbp
