#pragma once

// Independent reference computations shared by the test programs. Nothing
// here calls into the library's numerical routines except where noted.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "copbp/copula.hpp"
#include "copbp/model.hpp"
#include "copbp/table.hpp"

namespace testing {

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Adaptive Gauss-Kronrod over a rectangle, nested one-dimensional rules.
inline double integrate_2d(const std::function<double(double, double)>& f, double x0, double x1, double y0,
                           double y1, double tol = 1e-12) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto inner = [&](double x) { return GK::integrate([&](double y) { return f(x, y); }, y0, y1, 15, tol); };
  return GK::integrate(inner, x0, x1, 15, tol);
}

/// Bivariate normal density with unit variances.
inline double bvn_density(double x, double y, double rho) {
  const double r = 1.0 - rho * rho;
  return std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * r)) / (2.0 * M_PI * std::sqrt(r));
}

/// Kendall's tau-a in O(n log n): pairs discordant in y after sorting by x,
/// counted by merge sort (Knight's algorithm; no ties in continuous samples).
inline double kendall_tau(std::vector<std::pair<double, double>> xy) {
  const std::size_t n = xy.size();
  std::sort(xy.begin(), xy.end());
  std::vector<double> y(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = xy[i].second;
  long double swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (y[i] <= y[j]) {
          buf[k++] = y[i++];
        } else {
          swaps += static_cast<long double>(mid - i);
          buf[k++] = y[j++];
        }
      }
      while (i < mid) buf[k++] = y[i++];
      while (j < hi) buf[k++] = y[j++];
    }
    std::swap(y, buf);
  }
  const long double pairs = static_cast<long double>(n) * (n - 1) / 2.0L;
  return static_cast<double>((pairs - 2.0L * swaps) / pairs);
}

/// One-sample Kolmogorov-Smirnov statistic against U(0, 1).
inline double ks_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    d = std::max({d, (i + 1) / n - x[i], x[i] - i / n});
  return d;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Literal four-branch log-likelihood of the recursive model. Uses only the
/// copula CDF from the library.
inline double naive_loglik(const copbp::Copula& cop, const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
                           const Eigen::VectorXd& eta1, const Eigen::VectorXd& eta2, double gamma) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y1.size(); ++i) {
    const double p1 = Phi(eta1[i]);
    double cell;
    if (y1[i] == 1.0 && y2[i] == 1.0) {
      cell = cop.cdf(p1, Phi(eta2[i] + gamma));
    } else if (y1[i] == 1.0 && y2[i] == 0.0) {
      cell = p1 - cop.cdf(p1, Phi(eta2[i] + gamma));
    } else if (y1[i] == 0.0 && y2[i] == 1.0) {
      cell = Phi(eta2[i]) - cop.cdf(p1, Phi(eta2[i]));
    } else {
      cell = 1.0 - p1 - Phi(eta2[i]) + cop.cdf(p1, Phi(eta2[i]));
    }
    ll += std::log(std::max(cell, 1e-12));
  }
  return ll;
}

/// Small synthetic panel: columns y1, y2, x1, x2, z, s (s spans 0..30).
inline copbp::PanelTable small_panel(Eigen::Index n, unsigned seed, double rho = 0.4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 30.0);
  Eigen::MatrixXd V(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = nd(rng), x2 = nd(rng), z = nd(rng), s = ud(rng);
    const double e1 = nd(rng);
    const double e2 = rho * e1 + std::sqrt(1.0 - rho * rho) * nd(rng);
    const double y1 = (0.2 + 0.5 * x1 - 0.4 * x2 + 1.0 * z + e1 > 0) ? 1.0 : 0.0;
    const double y2 = (-0.5 + 0.3 * x1 + 0.3 * x2 - 0.2 * y1 + 0.5 * std::exp(-s / 5.0) + e2 > 0) ? 1.0 : 0.0;
    V.row(i) << y1, y2, x1, x2, z, s;
  }
  return copbp::PanelTable({"y1", "y2", "x1", "x2", "z", "s"}, V);
}

inline copbp::ModelSpec small_spec(const copbp::CopulaSpec& cop, bool smooth = false) {
  copbp::ModelSpec spec;
  spec.treatment_outcome = "y1";
  spec.conflict_outcome = "y2";
  spec.eq1_predictors = {"x1", "x2", "z"};
  spec.eq2_predictors = {"x1", "x2"};
  spec.instruments = {"z"};
  if (smooth) spec.eq2_smooths.push_back({"s", 6, 1.0});
  spec.copula = cop;
  return spec;
}

}  // namespace testing
