#include "copbp/copula.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "copbp/bivariate.hpp"
#include "copbp/detail/dual.hpp"
#include "copbp/margins.hpp"

namespace copbp {

namespace {

using detail::value_of;
using D3 = detail::Dual<3>;

template <class T>
const T& pick_max(const T& a, const T& b) {
  return value_of(a) >= value_of(b) ? a : b;
}
template <class T>
const T& pick_min(const T& a, const T& b) {
  return value_of(a) >= value_of(b) ? b : a;
}

// --- closed-form base families (rotation 0), templated for dual numbers ---

template <class T>
T clayton_cdf(const T& u, const T& v, const T& th) {
  using std::exp, std::expm1, std::log, std::log1p;
  const T a = -th * log(u);
  const T b = -th * log(v);
  T s;  // log(u^-th + v^-th - 1)
  if (std::max(value_of(a), value_of(b)) < 30.0) {
    s = log1p(expm1(a) + expm1(b));
  } else {
    const T m = pick_max(a, b);
    s = m + log(exp(a - m) + exp(b - m) - exp(-m));
  }
  return exp(-s / th);
}

template <class T>
T gumbel_cdf(const T& u, const T& v, const T& th) {
  using std::exp, std::log, std::log1p;
  const T lx = log(-log(u));
  const T ly = log(-log(v));
  const T hi = pick_max(lx, ly);
  const T lo = pick_min(lx, ly);
  const T a = exp(hi + log1p(exp(th * (lo - hi))) / th);  // (x^th + y^th)^(1/th)
  return exp(-a);
}

template <class T>
T hougaard_cdf(const T& u, const T& v, const T& th) {
  return gumbel_cdf(u, v, T(1.0) / th);
}

template <class T>
T joe_cdf(const T& u, const T& v, const T& th) {
  using std::exp, std::expm1, std::log, std::log1p;
  const T la = th * log1p(-u);
  const T lb = th * log1p(-v);
  const T a = exp(la);
  const T b = exp(lb);
  if (value_of(a) + value_of(b) - value_of(a) * value_of(b) < 0.5) return 1.0 - exp(log(a + b - a * b) / th);
  const T ca = -expm1(la);
  const T cb = -expm1(lb);
  return -expm1(log1p(-ca * cb) / th);
}

template <class T>
T frank_positive_cdf(const T& u, const T& v, const T& th) {
  using std::expm1, std::log1p;
  return -log1p(expm1(-th * u) * expm1(-th * v) / expm1(-th)) / th;
}

template <class T>
T frank_cdf(const T& u, const T& v, T th) {
  if (std::abs(value_of(th)) < kFrankGuard) th = th + ((value_of(th) < 0.0 ? -kFrankGuard : kFrankGuard) - value_of(th));
  if (value_of(th) > 0.0) return frank_positive_cdf(u, v, th);
  // C_{-a}(u, v) = u - C_a(u, 1 - v) keeps every exponential argument negative.
  return u - frank_positive_cdf(u, 1.0 - v, -th);
}

template <class T>
T plackett_cdf(const T& u, const T& v, const T& th) {
  using std::sqrt;
  const T tm1 = th - 1.0;
  if (std::abs(value_of(tm1)) < 1e-7) return u * v * (1.0 + tm1 * (1.0 - u) * (1.0 - v));
  const T s = 1.0 + tm1 * (u + v);
  const T disc = s * s - 4.0 * u * v * th * tm1;
  if (value_of(s) >= 0.0) return 2.0 * u * v * th / (s + sqrt(disc));
  return (s - sqrt(disc)) / (2.0 * tm1);
}

template <class T>
T amh_cdf(const T& u, const T& v, const T& th) {
  return u * v / (1.0 - th * (1.0 - u) * (1.0 - v));
}

template <class T>
T fgm_cdf(const T& u, const T& v, const T& th) {
  return u * v * (1.0 + th * (1.0 - u) * (1.0 - v));
}

template <class T>
T closed_form_cdf(CopulaFamily f, const T& u, const T& v, const T& th) {
  switch (f) {
    case CopulaFamily::Clayton: return clayton_cdf(u, v, th);
    case CopulaFamily::Gumbel: return gumbel_cdf(u, v, th);
    case CopulaFamily::Hougaard: return hougaard_cdf(u, v, th);
    case CopulaFamily::Joe: return joe_cdf(u, v, th);
    case CopulaFamily::Frank: return frank_cdf(u, v, th);
    case CopulaFamily::Plackett: return plackett_cdf(u, v, th);
    case CopulaFamily::AMH: return amh_cdf(u, v, th);
    case CopulaFamily::FGM: return fgm_cdf(u, v, th);
    default: break;
  }
  throw std::logic_error("closed_form_cdf: elliptical family");
}

double clamp_unit(double x) { return std::clamp(x, kUniformClamp, 1.0 - kUniformClamp); }

const char* rotation_suffix(Rotation r) {
  switch (r) {
    case Rotation::Deg0: return "0";
    case Rotation::Deg90: return "90";
    case Rotation::Deg180: return "180";
    case Rotation::Deg270: return "270";
  }
  return "0";
}

double logistic(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

}  // namespace

// ------------------------------------------------------------------ specs ---

bool admits_rotation(CopulaFamily family) {
  return family == CopulaFamily::Clayton || family == CopulaFamily::Gumbel || family == CopulaFamily::Joe;
}

std::vector<CopulaSpec> all_copula_specs() {
  std::vector<CopulaSpec> out;
  for (auto f : {CopulaFamily::Gaussian, CopulaFamily::StudentT, CopulaFamily::Frank, CopulaFamily::Plackett,
                 CopulaFamily::AMH, CopulaFamily::FGM, CopulaFamily::Hougaard})
    out.push_back({f, Rotation::Deg0, 0.0, {}});
  for (auto f : {CopulaFamily::Clayton, CopulaFamily::Gumbel, CopulaFamily::Joe})
    for (auto r : {Rotation::Deg0, Rotation::Deg90, Rotation::Deg180, Rotation::Deg270})
      out.push_back({f, r, 0.0, {}});
  return out;
}

std::string family_name(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Gaussian: return "Gaussian";
    case CopulaFamily::StudentT: return "Student-t";
    case CopulaFamily::Frank: return "Frank";
    case CopulaFamily::Plackett: return "Plackett";
    case CopulaFamily::AMH: return "Ali-Mikhail-Haq";
    case CopulaFamily::FGM: return "Farlie-Gumbel-Morgenstern";
    case CopulaFamily::Hougaard: return "Hougaard";
    case CopulaFamily::Clayton: return "Clayton";
    case CopulaFamily::Gumbel: return "Gumbel";
    case CopulaFamily::Joe: return "Joe";
  }
  return "?";
}

std::string to_code(const CopulaSpec& spec) {
  switch (spec.family) {
    case CopulaFamily::Gaussian: return "N";
    case CopulaFamily::StudentT: return "T";
    case CopulaFamily::Frank: return "F";
    case CopulaFamily::Plackett: return "PL";
    case CopulaFamily::AMH: return "AMH";
    case CopulaFamily::FGM: return "FGM";
    case CopulaFamily::Hougaard: return "HO";
    case CopulaFamily::Clayton: return std::string("C") + rotation_suffix(spec.rotation);
    case CopulaFamily::Gumbel: return std::string("G") + rotation_suffix(spec.rotation);
    case CopulaFamily::Joe: return std::string("J") + rotation_suffix(spec.rotation);
  }
  return "?";
}

CopulaSpec from_code(std::string_view code) {
  CopulaSpec spec;
  auto fixed = [&](CopulaFamily f) {
    spec.family = f;
    return spec;
  };
  if (code == "N") return fixed(CopulaFamily::Gaussian);
  if (code == "T") return fixed(CopulaFamily::StudentT);
  if (code == "F") return fixed(CopulaFamily::Frank);
  if (code == "PL") return fixed(CopulaFamily::Plackett);
  if (code == "AMH") return fixed(CopulaFamily::AMH);
  if (code == "FGM") return fixed(CopulaFamily::FGM);
  if (code == "HO") return fixed(CopulaFamily::Hougaard);
  if (!code.empty()) {
    switch (code.front()) {
      case 'C': spec.family = CopulaFamily::Clayton; break;
      case 'G': spec.family = CopulaFamily::Gumbel; break;
      case 'J': spec.family = CopulaFamily::Joe; break;
      default: throw std::invalid_argument("unknown copula code '" + std::string(code) + "'");
    }
    const auto rest = code.substr(1);
    if (rest.empty() || rest == "0") spec.rotation = Rotation::Deg0;
    else if (rest == "90") spec.rotation = Rotation::Deg90;
    else if (rest == "180") spec.rotation = Rotation::Deg180;
    else if (rest == "270") spec.rotation = Rotation::Deg270;
    else throw std::invalid_argument("unknown copula code '" + std::string(code) + "'");
    return spec;
  }
  throw std::invalid_argument("empty copula code");
}

double link(double t, CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
    case CopulaFamily::AMH:
    case CopulaFamily::FGM: {
      // keep strictly inside (-1, 1) even where tanh rounds to +-1
      const double lim = 1.0 - 1e-15;
      return std::clamp(std::tanh(t), -lim, lim);
    }
    case CopulaFamily::Clayton:
    case CopulaFamily::Plackett: return std::max(std::exp(t), 1e-300);
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe: return 1.0 + std::max(std::exp(t), 1e-300);
    case CopulaFamily::Hougaard: return std::max(logistic(t), 1e-300);
    case CopulaFamily::Frank:
      if (std::abs(t) < kFrankGuard) return t < 0.0 ? -kFrankGuard : kFrankGuard;
      return t;
  }
  return t;
}

double link_derivative(double t, CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
    case CopulaFamily::AMH:
    case CopulaFamily::FGM: {
      const double c = std::cosh(t);
      return 1.0 / (c * c);
    }
    case CopulaFamily::Clayton:
    case CopulaFamily::Plackett:
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe: return std::exp(t);
    case CopulaFamily::Hougaard: {
      const double p = logistic(t);
      return p * (1.0 - p);
    }
    case CopulaFamily::Frank: return 1.0;
  }
  return 1.0;
}

double unlink(double theta, CopulaFamily family) {
  auto reject = [&]() -> double {
    throw InvalidParameter("unlink: " + std::to_string(theta) + " is outside the open domain of the " +
                           family_name(family) + " family");
  };
  switch (family) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
    case CopulaFamily::AMH:
    case CopulaFamily::FGM:
      if (!(theta > -1.0 && theta < 1.0)) return reject();
      return std::atanh(theta);
    case CopulaFamily::Clayton:
    case CopulaFamily::Plackett:
      if (!(theta > 0.0) || !std::isfinite(theta)) return reject();
      return std::log(theta);
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe:
      if (!(theta > 1.0) || !std::isfinite(theta)) return reject();
      return std::log(theta - 1.0);
    case CopulaFamily::Hougaard:
      if (!(theta > 0.0 && theta < 1.0)) return reject();
      return std::log(theta / (1.0 - theta));
    case CopulaFamily::Frank:
      if (!std::isfinite(theta) || std::abs(theta) < kFrankGuard) return reject();
      return theta;
  }
  return reject();
}

bool in_domain(double theta, CopulaFamily family) {
  if (!std::isfinite(theta)) return false;
  switch (family) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT: return theta > -1.0 && theta < 1.0;
    case CopulaFamily::AMH: return theta >= -1.0 && theta < 1.0;
    case CopulaFamily::FGM: return theta >= -1.0 && theta <= 1.0;
    case CopulaFamily::Clayton:
    case CopulaFamily::Plackett: return theta > 0.0;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe: return theta >= 1.0;
    case CopulaFamily::Hougaard: return theta > 0.0 && theta <= 1.0;
    case CopulaFamily::Frank: return true;
  }
  return false;
}

CopulaSpec with_natural(CopulaFamily family, Rotation rotation, double theta) {
  return {family, rotation, unlink(theta, family), {}};
}

double CopulaSpec::natural() const { return link(theta_unconstrained, family); }

double kendall_tau(const CopulaSpec& spec) {
  const double th = spec.natural();
  double tau = 0.0;
  switch (spec.family) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT: tau = 2.0 / std::numbers::pi * std::asin(th); break;
    case CopulaFamily::Clayton: tau = th / (th + 2.0); break;
    case CopulaFamily::Gumbel: tau = 1.0 - 1.0 / th; break;
    case CopulaFamily::Hougaard: tau = 1.0 - th; break;
    case CopulaFamily::FGM: tau = 2.0 * th / 9.0; break;
    case CopulaFamily::AMH:
      tau = std::abs(th) < 1e-6 ? 2.0 * th / 9.0
                                : 1.0 - 2.0 * (th + (1.0 - th) * (1.0 - th) * std::log1p(-th)) / (3.0 * th * th);
      break;
    case CopulaFamily::Frank: {
      const double a = std::abs(th);
      auto f = [](double t) { return t < 1e-12 ? 1.0 : t / std::expm1(t); };
      const double debye = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, a, 10, 1e-13) / a;
      tau = std::copysign(1.0 - 4.0 / a + 4.0 * debye / a, th);
      break;
    }
    case CopulaFamily::Joe:
      if (std::abs(th - 2.0) < 1e-9) tau = 2.0 - std::numbers::pi * std::numbers::pi / 6.0;
      else tau = 1.0 + 2.0 / (2.0 - th) * (boost::math::digamma(2.0) - boost::math::digamma(2.0 / th + 1.0));
      break;
    case CopulaFamily::Plackett: throw InvalidParameter("kendall_tau: no closed form for Plackett");
  }
  if (spec.rotation == Rotation::Deg90 || spec.rotation == Rotation::Deg270) tau = -tau;
  return tau;
}

double theta_for_tau(CopulaFamily family, double tau) {
  switch (family) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT: return std::sin(std::numbers::pi * tau / 2.0);
    case CopulaFamily::Clayton: return 2.0 * tau / (1.0 - tau);
    case CopulaFamily::Gumbel: return 1.0 / (1.0 - tau);
    case CopulaFamily::Hougaard: return 1.0 - tau;
    case CopulaFamily::FGM: return 4.5 * tau;
    default: break;
  }
  if (family == CopulaFamily::Plackett) throw InvalidParameter("theta_for_tau: unsupported for Plackett");
  auto gap = [&](double t) {
    CopulaSpec s{family, Rotation::Deg0, t, {}};
    return kendall_tau(s) - tau;
  };
  boost::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(gap, -30.0, 30.0, boost::math::tools::eps_tolerance<double>(50), iters);
  return link(0.5 * (r.first + r.second), family);
}

// ----------------------------------------------------------------- Copula ---

Copula::Copula(CopulaFamily family, Rotation rotation, double theta, double df)
    : family_(family), rotation_(rotation), theta_(theta), df_(df) {
  if (rotation != Rotation::Deg0 && !admits_rotation(family))
    throw InvalidParameter(family_name(family) + " copula admits no rotation");
  if (!in_domain(theta, family))
    throw InvalidParameter("parameter " + std::to_string(theta) + " outside the " + family_name(family) +
                           " domain");
  if (family == CopulaFamily::StudentT && !(df > 0.0)) throw InvalidParameter("Student t df must be positive");
}

Copula Copula::from_spec(const CopulaSpec& spec) {
  return Copula(spec.family, spec.rotation, spec.natural(), spec.df());
}

CopulaDerivatives Copula::base(double u, double v) const {
  switch (family_) {
    case CopulaFamily::Gaussian: {
      const double x = probit_inv(u), y = probit_inv(v);
      const double s = std::sqrt(1.0 - theta_ * theta_);
      return {bivariate_normal_cdf(x, y, theta_), probit((y - theta_ * x) / s), probit((x - theta_ * y) / s),
              bivariate_normal_pdf(x, y, theta_)};
    }
    case CopulaFamily::StudentT: {
      const double x = student_t_quantile(u, df_), y = student_t_quantile(v, df_);
      const double ors = 1.0 - theta_ * theta_;
      const double du = student_t_cdf((y - theta_ * x) * std::sqrt((df_ + 1.0) / ((df_ + x * x) * ors)), df_ + 1.0);
      const double dv = student_t_cdf((x - theta_ * y) * std::sqrt((df_ + 1.0) / ((df_ + y * y) * ors)), df_ + 1.0);
      return {bivariate_t_cdf(x, y, theta_, df_), du, dv, bivariate_t_cdf_drho(x, y, theta_, df_)};
    }
    default: {
      const D3 c = closed_form_cdf(family_, D3::seed(u, 0), D3::seed(v, 1), D3::seed(theta_, 2));
      return {c.v, c.d[0], c.d[1], c.d[2]};
    }
  }
}

double Copula::base_cdf(double u, double v) const {
  switch (family_) {
    case CopulaFamily::Gaussian: return bivariate_normal_cdf(probit_inv(u), probit_inv(v), theta_);
    case CopulaFamily::StudentT:
      return bivariate_t_cdf(student_t_quantile(u, df_), student_t_quantile(v, df_), theta_, df_);
    default: return closed_form_cdf(family_, u, v, theta_);
  }
}

double Copula::cdf(double u, double v) const {
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0) return std::min(v, 1.0);
  if (v >= 1.0) return u;
  u = clamp_unit(u);
  v = clamp_unit(v);
  double c = rotate_cdf([this](double a, double b) { return base_cdf(a, b); }, rotation_, u, v);
  return std::clamp(c, std::max(u + v - 1.0, 0.0), std::min(u, v));
}

CopulaDerivatives Copula::derivatives(double u, double v) const {
  u = clamp_unit(u);
  v = clamp_unit(v);
  CopulaDerivatives b;
  CopulaDerivatives out;
  switch (rotation_) {
    case Rotation::Deg0:
      out = base(u, v);
      break;
    case Rotation::Deg90:
      b = base(1.0 - u, v);
      out = {v - b.cdf, b.du, 1.0 - b.dv, -b.dtheta};
      break;
    case Rotation::Deg180:
      b = base(1.0 - u, 1.0 - v);
      out = {u + v - 1.0 + b.cdf, 1.0 - b.du, 1.0 - b.dv, b.dtheta};
      break;
    case Rotation::Deg270:
      b = base(u, 1.0 - v);
      out = {u - b.cdf, 1.0 - b.du, b.dv, -b.dtheta};
      break;
  }
  out.cdf = std::clamp(out.cdf, std::max(u + v - 1.0, 0.0), std::min(u, v));
  out.du = std::clamp(out.du, 0.0, 1.0);
  out.dv = std::clamp(out.dv, 0.0, 1.0);
  return out;
}

double Copula::partial_u(double u, double v) const {
  if (v <= 0.0) return 0.0;
  if (v >= 1.0) return 1.0;
  return derivatives(u, v).du;
}

double Copula::partial_v(double u, double v) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return derivatives(u, v).dv;
}

double Copula::base_conditional_inverse(double u, double w) const {
  switch (family_) {
    case CopulaFamily::Gaussian: {
      const double x = probit_inv(u);
      return probit(theta_ * x + std::sqrt(1.0 - theta_ * theta_) * probit_inv(w));
    }
    case CopulaFamily::StudentT: {
      const double x = student_t_quantile(u, df_);
      const double scale = std::sqrt((1.0 - theta_ * theta_) * (df_ + x * x) / (df_ + 1.0));
      return student_t_cdf(theta_ * x + scale * student_t_quantile(w, df_ + 1.0), df_);
    }
    case CopulaFamily::Clayton: {
      const double e = -theta_ / (1.0 + theta_);
      const double base = std::expm1(e * std::log(w)) * std::pow(u, -theta_) + 1.0;
      return std::pow(base, -1.0 / theta_);
    }
    default: break;
  }
  auto f = [&](double v) {
    if (v <= 0.0) return -w;
    if (v >= 1.0) return 1.0 - w;
    const D3 c = closed_form_cdf(family_, D3::seed(u, 0), D3(v), D3(theta_));
    return c.d[0] - w;
  };
  boost::uintmax_t iters = 200;
  try {
    auto r = boost::math::tools::toms748_solve(f, 0.0, 1.0, -w, 1.0 - w,
                                               boost::math::tools::eps_tolerance<double>(45), iters);
    if (iters >= 200) throw SamplerError("no convergence");
    return 0.5 * (r.first + r.second);
  } catch (const std::exception& e) {
    throw SamplerError("conditional inversion failed for " + family_name(family_) + " theta=" +
                       std::to_string(theta_) + " u=" + std::to_string(u) + " w=" + std::to_string(w) + ": " +
                       e.what());
  }
}

std::pair<double, double> Copula::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double a = clamp_unit(unif(rng));
  const double w = clamp_unit(unif(rng));
  // Draw from the unrotated copula, then reflect.
  const double b = std::clamp(base_conditional_inverse(a, w), 0.0, 1.0);
  switch (rotation_) {
    case Rotation::Deg0: return {a, b};
    case Rotation::Deg90: return {1.0 - a, b};
    case Rotation::Deg180: return {1.0 - a, 1.0 - b};
    case Rotation::Deg270: return {a, 1.0 - b};
  }
  return {a, b};
}

double cdf(const CopulaSpec& spec, double u, double v) { return Copula::from_spec(spec).cdf(u, v); }
double partial_u(const CopulaSpec& spec, double u, double v) { return Copula::from_spec(spec).partial_u(u, v); }
double partial_v(const CopulaSpec& spec, double u, double v) { return Copula::from_spec(spec).partial_v(u, v); }
std::pair<double, double> sample_pair(const CopulaSpec& spec, std::mt19937_64& rng) {
  return Copula::from_spec(spec).sample(rng);
}

double rotate_cdf(const std::function<double(double, double)>& base_cdf, Rotation rotation, double u, double v) {
  switch (rotation) {
    case Rotation::Deg0: return base_cdf(u, v);
    case Rotation::Deg90: return v - base_cdf(1.0 - u, v);
    case Rotation::Deg180: return u + v - 1.0 + base_cdf(1.0 - u, 1.0 - v);
    case Rotation::Deg270: return u - base_cdf(u, 1.0 - v);
  }
  return base_cdf(u, v);
}

}  // namespace copbp
