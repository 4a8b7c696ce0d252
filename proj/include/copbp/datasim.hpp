#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "copbp/copula.hpp"
#include "copbp/model.hpp"
#include "copbp/table.hpp"

namespace copbp {

/// Synthetic recursive design with known truth.
///
///   y1 = 1[u <= Phi(eta1)],  eta1 = beta1 . [1, c] + instrument_strength * sum(z)
///   y2 = 1[v <= Phi(eta2 + gamma * y1)],  eta2 = beta2 . [1, c] + peace_effect * exp(-peace / 5)
///
/// with (u, v) drawn from `copula_true`; equivalently latent errors
/// e = -Phi^{-1}(u) with standard normal margins. Observed confounders c are
/// N(0, confounder_strength^2), instruments z are N(0, 1), peace is uniform on
/// 0..30.
struct DgpSpec {
  Eigen::Index n_rows = 5000;
  Eigen::VectorXd beta1_true = (Eigen::VectorXd(3) << 0.0, 0.5, -0.3).finished();
  Eigen::VectorXd beta2_true = (Eigen::VectorXd(3) << -1.9, 0.4, 0.3).finished();
  double gamma_true = 0.0;
  CopulaSpec copula_true{};
  double instrument_strength = 1.0;
  int n_instruments = 2;
  double confounder_strength = 1.0;
  double peace_effect = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  int n_confounders() const { return static_cast<int>(beta1_true.size()) - 1; }
};

struct TruthRecord {
  DgpSpec dgp;
  double true_ate = 0.0;
  double kendall_tau = 0.0;  // NaN when the family has no closed form
  double treatment_prevalence = 0.0;
  double outcome_prevalence = 0.0;
};

/// Columns: row_id, dyad, year, treat, conflict, c1.., z1.., peace.
std::pair<PanelTable, TruthRecord> generate(const DgpSpec& dgp);

/// mean over rows of Phi(eta2_true + gamma_true) - Phi(eta2_true).
double true_ate(const DgpSpec& dgp, const PanelTable& data);

/// Joint model matching the generator's columns.
ModelSpec dgp_model_spec(const DgpSpec& dgp, bool peace_spline = false);

}  // namespace copbp
