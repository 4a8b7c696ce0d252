#include "copbp/margins.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace copbp {

double probit(double eta) { return 0.5 * std::erfc(-eta / std::numbers::sqrt2); }

double probit_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("probit_inv: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double log_probit(double eta) {
  if (eta > -37.0) return std::log(probit(eta));
  // Mills-ratio asymptotic series; the first omitted term is below 1e-17 here.
  const double w = 1.0 / (eta * eta);
  const double series =
      w * (-1.0 + w * (3.0 + w * (-15.0 + w * (105.0 + w * (-945.0 + w * 10395.0)))));
  return -0.5 * eta * eta - std::log(-eta) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log1p(series);
}

Eigen::Index LinearPredictor::expected_size() const {
  Eigen::Index n = 1 + static_cast<Eigen::Index>(design_columns.size());
  for (const auto& s : smooth_terms) n += s.n_coefficients();
  return n;
}

double eta(const LinearPredictor& lp, const Row& row) {
  if (lp.coefficients.size() != lp.expected_size())
    throw std::invalid_argument("eta: coefficient vector has the wrong length");
  auto lookup = [&](const std::string& name) {
    auto it = row.find(name);
    if (it == row.end()) throw MissingColumn("eta: row is missing column '" + name + "'");
    return it->second;
  };
  double out = lp.coefficients[0];
  Eigen::Index k = 1;
  for (const auto& col : lp.design_columns) out += lp.coefficients[k++] * lookup(col);
  for (const auto& s : lp.smooth_terms) {
    const Eigen::Index m = s.n_coefficients();
    out += s.evaluate(lookup(s.column)).dot(lp.coefficients.segment(k, m));
    k += m;
  }
  return out;
}

}  // namespace copbp
