#include "copbp/spline.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace copbp {

namespace {

struct Pieces {
  Eigen::Index j;  // left knot of the interval
  double am, ap, cm, cp;
};

// Coefficients of f(x) = am*b_j + ap*b_{j+1} + cm*d_j + cp*d_{j+1}, where b are
// knot values and d knot second derivatives.
Pieces interior_pieces(const Eigen::VectorXd& knots, double x) {
  const Eigen::Index k = knots.size();
  auto it = std::upper_bound(knots.data(), knots.data() + k, x);
  Eigen::Index j = std::clamp<Eigen::Index>((it - knots.data()) - 1, 0, k - 2);
  const double h = knots[j + 1] - knots[j];
  const double dm = knots[j + 1] - x;
  const double dp = x - knots[j];
  return {j, dm / h, dp / h, (dm * dm * dm / h - h * dm) / 6.0, (dp * dp * dp / h - h * dp) / 6.0};
}

}  // namespace

Eigen::RowVectorXd SmoothTerm::evaluate_uncentered(double x) const {
  const Eigen::Index k = knots.size();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(k);
  const bool left = x < knots[0];
  const bool right = x > knots[k - 1];
  if (!left && !right) {
    const Pieces p = interior_pieces(knots, x);
    row[p.j] += p.am;
    row[p.j + 1] += p.ap;
    row += p.cm * knot_curvature.row(p.j) + p.cp * knot_curvature.row(p.j + 1);
    return row;
  }
  // Linear extrapolation: value at the boundary knot plus slope times distance.
  const Eigen::Index j = left ? 0 : k - 2;
  const double h = knots[j + 1] - knots[j];
  const double x0 = left ? knots[0] : knots[k - 1];
  Eigen::RowVectorXd slope = Eigen::RowVectorXd::Zero(k);
  slope[j] = -1.0 / h;
  slope[j + 1] = 1.0 / h;
  if (left) {
    slope += (-h / 3.0) * knot_curvature.row(0) + (-h / 6.0) * knot_curvature.row(1);
    row[0] = 1.0;
  } else {
    slope += (h / 6.0) * knot_curvature.row(k - 2) + (h / 3.0) * knot_curvature.row(k - 1);
    row[k - 1] = 1.0;
  }
  return row + (x - x0) * slope;
}

Eigen::RowVectorXd SmoothTerm::evaluate(double x) const { return evaluate_uncentered(x) * constraint; }

Eigen::MatrixXd SmoothTerm::basis(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::MatrixXd raw(x.size(), basis_dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) raw.row(i) = evaluate_uncentered(x[i]);
  return raw * constraint;
}

SplineBasis build_spline_basis(const Eigen::Ref<const Eigen::VectorXd>& values, int basis_dim,
                               std::string column) {
  if (basis_dim < 3) throw std::invalid_argument("build_spline_basis: basis_dim must be >= 3");
  std::vector<double> uniq(values.data(), values.data() + values.size());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (static_cast<int>(uniq.size()) < basis_dim)
    throw DegenerateInput("build_spline_basis: column '" + column + "' has " +
                          std::to_string(uniq.size()) + " distinct values, need " +
                          std::to_string(basis_dim));

  const Eigen::Index k = basis_dim;
  const double m1 = static_cast<double>(uniq.size() - 1);
  Eigen::VectorXd knots(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double pos = m1 * static_cast<double>(j) / static_cast<double>(k - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, uniq.size() - 1);
    knots[j] = uniq[lo] + (pos - static_cast<double>(lo)) * (uniq[hi] - uniq[lo]);
  }

  // Natural cubic spline: B * d_interior = D * b, with zero curvature at the ends.
  Eigen::VectorXd h = knots.tail(k - 1) - knots.head(k - 1);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(k - 2, k);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k - 2, k - 2);
  for (Eigen::Index i = 0; i < k - 2; ++i) {
    D(i, i) = 1.0 / h[i];
    D(i, i + 1) = -1.0 / h[i] - 1.0 / h[i + 1];
    D(i, i + 2) = 1.0 / h[i + 1];
    B(i, i) = (h[i] + h[i + 1]) / 3.0;
    if (i + 1 < k - 2) B(i, i + 1) = B(i + 1, i) = h[i + 1] / 6.0;
  }
  Eigen::LLT<Eigen::MatrixXd> bllt(B);
  const Eigen::MatrixXd BinvD = bllt.solve(D);

  SmoothTerm term;
  term.column = std::move(column);
  term.basis_dim = basis_dim;
  term.knots = knots;
  term.knot_curvature = Eigen::MatrixXd::Zero(k, k);
  term.knot_curvature.middleRows(1, k - 2) = BinvD;
  term.constraint = Eigen::MatrixXd::Identity(k, k - 1);

  Eigen::MatrixXd raw(values.size(), k);
  for (Eigen::Index i = 0; i < values.size(); ++i) raw.row(i) = term.evaluate_uncentered(values[i]);

  // Null space of the column sums gives the sum-to-zero reparameterization.
  Eigen::VectorXd sums = raw.colwise().sum().transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sums);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  term.constraint = Q.rightCols(k - 1);

  Eigen::MatrixXd S = D.transpose() * BinvD;
  S = 0.5 * (S + S.transpose()).eval();
  term.penalty = term.constraint.transpose() * S * term.constraint;
  term.penalty = 0.5 * (term.penalty + term.penalty.transpose()).eval();

  // Rescale the penalty to the size of the basis so that lambda does not
  // depend on the units of the column.
  const Eigen::MatrixXd centered = raw * term.constraint;
  const double basis_norm = centered.cwiseAbs().rowwise().sum().maxCoeff();
  const double penalty_norm = term.penalty.cwiseAbs().rowwise().sum().maxCoeff();
  if (penalty_norm > 0.0) term.penalty *= basis_norm * basis_norm / penalty_norm;

  return {centered, term.penalty, knots, term};
}

}  // namespace copbp
