#include "copbp/bivariate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "copbp/margins.hpp"

namespace copbp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <std::size_t N>
struct LegendreHalf {
  static const auto& nodes() { return boost::math::quadrature::gauss<double, N>::abscissa(); }
  static const auto& weights() { return boost::math::quadrature::gauss<double, N>::weights(); }
};

// Sum over +-x Gauss-Legendre nodes on [-1, 1], f evaluated at (1 - x) and (1 + x).
template <std::size_t N, class F>
double legendre_pairs(F&& f) {
  const auto& x = LegendreHalf<N>::nodes();
  const auto& w = LegendreHalf<N>::weights();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * (f(1.0 - x[i]) + f(1.0 + x[i]));
  return s;
}

// Upper orthant probability P(X > dh, Y > dk); Genz's bvnu.
double bvnu(double dh, double dk, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (dh == inf || dk == inf) return 0.0;
  if (dh == -inf) return dk == -inf ? 1.0 : probit(-dk);
  if (dk == -inf) return probit(-dh);
  if (r == 0.0) return probit(-dh) * probit(-dk);

  double h = dh, k = dk, hk = h * k, bvn = 0.0;
  const double ar = std::abs(r);
  auto with_nodes = [&](auto&& f) {
    if (ar < 0.3) return legendre_pairs<6>(f);
    if (ar < 0.75) return legendre_pairs<12>(f);
    return legendre_pairs<20>(f);
  };

  if (ar < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    bvn = with_nodes([&](double x) {
      const double sn = std::sin(asr * x);
      return std::exp((sn * hk - hs) / (1.0 - sn * sn));
    });
    return std::clamp(bvn * asr / kTwoPi + probit(-h) * probit(-k), 0.0, 1.0);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (ar < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    double asr = -(bs / as + hk) / 2.0;
    if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(kTwoPi) * probit(-b / a);
      bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a /= 2.0;
    const double tail = with_nodes([&](double x) {
      // x in (0, 2): maps the half-weight node pair onto a*(1 -+ node)
      const double xs = (a * x) * (a * x);
      const double e = -(bs / xs + hk) / 2.0;
      if (e <= -100.0) return 0.0;
      const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
      const double rs = std::sqrt(1.0 - xs);
      const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
      return std::exp(e) * (sp - ep);
    });
    bvn = (a * tail - bvn) / kTwoPi;
  }
  if (r > 0.0) {
    bvn += probit(-std::max(h, k));
  } else if (h >= k) {
    bvn = -bvn;
  } else {
    const double L = h < 0.0 ? probit(k) - probit(h) : probit(-h) - probit(-k);
    bvn = L - bvn;
  }
  return std::clamp(bvn, 0.0, 1.0);
}

// Dunnett-Sobel recursion for integer degrees of freedom (Genz's bvtl).
double bvtl_integer(int nu, double dh, double dk, double r) {
  const double pi = std::numbers::pi;
  const double snu = std::sqrt(static_cast<double>(nu));
  const double ors = 1.0 - r * r;
  const double hrk = dh - r * dk;
  const double krh = dk - r * dh;
  double xnhk = 0.0, xnkh = 0.0;
  if (std::abs(hrk) + ors > 0.0) {
    xnhk = hrk * hrk / (hrk * hrk + ors * (nu + dk * dk));
    xnkh = krh * krh / (krh * krh + ors * (nu + dh * dh));
  }
  const double hs = hrk < 0.0 ? -1.0 : 1.0;
  const double ks = krh < 0.0 ? -1.0 : 1.0;
  double bvt = 0.0;
  if (nu % 2 == 0) {
    bvt = std::atan2(std::sqrt(ors), -r) / kTwoPi;
    double gmph = dh / std::sqrt(16.0 * (nu + dh * dh));
    double gmpk = dk / std::sqrt(16.0 * (nu + dk * dk));
    double btnckh = 2.0 * std::atan2(std::sqrt(xnkh), std::sqrt(1.0 - xnkh)) / pi;
    double btpdkh = 2.0 * std::sqrt(xnkh * (1.0 - xnkh)) / pi;
    double btnchk = 2.0 * std::atan2(std::sqrt(xnhk), std::sqrt(1.0 - xnhk)) / pi;
    double btpdhk = 2.0 * std::sqrt(xnhk * (1.0 - xnhk)) / pi;
    for (int j = 1; j <= nu / 2; ++j) {
      bvt += gmph * (1.0 + ks * btnckh);
      bvt += gmpk * (1.0 + hs * btnchk);
      btnckh += btpdkh;
      btpdkh = 2.0 * j * btpdkh * (1.0 - xnkh) / (2.0 * j + 1.0);
      btnchk += btpdhk;
      btpdhk = 2.0 * j * btpdhk * (1.0 - xnhk) / (2.0 * j + 1.0);
      gmph = gmph * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dh * dh / nu));
      gmpk = gmpk * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dk * dk / nu));
    }
  } else {
    const double qhrk = std::sqrt(dh * dh + dk * dk - 2.0 * r * dh * dk + nu * ors);
    const double hkrn = dh * dk + r * nu;
    const double hkn = dh * dk - nu;
    const double hpk = dh + dk;
    bvt = std::atan2(-snu * (hkn * qhrk + hpk * hkrn), hkn * hkrn - nu * hpk * qhrk) / kTwoPi;
    if (bvt < -1e-15) bvt += 1.0;
    double gmph = dh / (kTwoPi * snu * (1.0 + dh * dh / nu));
    double gmpk = dk / (kTwoPi * snu * (1.0 + dk * dk / nu));
    double btnckh = std::sqrt(xnkh), btpdkh = btnckh;
    double btnchk = std::sqrt(xnhk), btpdhk = btnchk;
    for (int j = 1; j <= (nu - 1) / 2; ++j) {
      bvt += gmph * (1.0 + ks * btnckh);
      bvt += gmpk * (1.0 + hs * btnchk);
      btpdkh = (2.0 * j - 1.0) * btpdkh * (1.0 - xnkh) / (2.0 * j);
      btnckh += btpdkh;
      btpdhk = (2.0 * j - 1.0) * btpdhk * (1.0 - xnhk) / (2.0 * j);
      btnchk += btpdhk;
      gmph = gmph * 2.0 * j / ((2.0 * j + 1.0) * (1.0 + dh * dh / nu));
      gmpk = gmpk * 2.0 * j / ((2.0 * j + 1.0) * (1.0 + dk * dk / nu));
    }
  }
  return std::clamp(bvt, 0.0, 1.0);
}

// P(X <= x, Y <= y) = int_{-inf}^{x} f_nu(s) F_{nu+1}((y - rho s) / scale(s)) ds.
double bvt_quadrature(double x, double y, double rho, double nu) {
  const boost::math::students_t_distribution<double> t0(nu), t1(nu + 1.0);
  const double ors = 1.0 - rho * rho;
  auto integrand = [&](double s) {
    const double scale = std::sqrt(ors * (nu + s * s) / (nu + 1.0));
    return boost::math::pdf(t0, s) * boost::math::cdf(t1, (y - rho * s) / scale);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::clamp(GK::integrate(integrand, -inf, x, 15, 1e-13), 0.0, 1.0);
}

}  // namespace

double bivariate_normal_cdf(double x, double y, double rho) { return bvnu(-x, -y, rho); }

double bivariate_normal_pdf(double x, double y, double rho) {
  const double ors = 1.0 - rho * rho;
  return std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * ors)) / (kTwoPi * std::sqrt(ors));
}

double bivariate_t_cdf(double x, double y, double rho, double nu) {
  const double rounded = std::round(nu);
  if (rounded == nu && nu >= 1.0 && nu <= 1000.0 && std::isfinite(x) && std::isfinite(y))
    return bvtl_integer(static_cast<int>(rounded), x, y, rho);
  return bvt_quadrature(x, y, rho, nu);
}

double bivariate_t_cdf_drho(double x, double y, double rho, double nu) {
  const double ors = 1.0 - rho * rho;
  const double q = (x * x - 2.0 * rho * x * y + y * y) / (nu * ors);
  return std::pow(1.0 + q, -nu / 2.0) / (kTwoPi * std::sqrt(ors));
}

double student_t_cdf(double x, double nu) {
  return boost::math::cdf(boost::math::students_t_distribution<double>(nu), x);
}

double student_t_quantile(double p, double nu) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(nu), p);
}

}  // namespace copbp
