#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

#include "copbp/copula.hpp"
#include "support.hpp"

using namespace copbp;

namespace {

// Every spec at a handful of dependence strengths, including strong ones.
std::vector<CopulaSpec> grid_specs() {
  std::vector<CopulaSpec> out;
  for (const CopulaSpec& base : all_copula_specs()) {
    std::vector<double> thetas;
    switch (base.family) {
      case CopulaFamily::Gaussian:
      case CopulaFamily::StudentT: thetas = {-0.7, 0.3, 0.9}; break;
      case CopulaFamily::Frank: thetas = {-8.0, 2.0, 15.0}; break;
      case CopulaFamily::Plackett: thetas = {0.2, 5.0, 30.0}; break;
      case CopulaFamily::AMH: thetas = {-0.9, 0.5, 0.95}; break;
      case CopulaFamily::FGM: thetas = {-0.9, 0.5, 0.99}; break;
      case CopulaFamily::Hougaard: thetas = {0.3, 0.7}; break;
      case CopulaFamily::Clayton: thetas = {0.5, 3.0, 10.0}; break;
      case CopulaFamily::Gumbel:
      case CopulaFamily::Joe: thetas = {1.2, 3.0, 8.0}; break;
    }
    for (double t : thetas) out.push_back(with_natural(base.family, base.rotation, t));
  }
  CopulaSpec t25 = with_natural(CopulaFamily::StudentT, Rotation::Deg0, 0.5);
  t25.extra = 2.5;
  out.push_back(t25);
  return out;
}

std::string label(const CopulaSpec& s) { return to_code(s) + " theta=" + std::to_string(s.natural()); }

double grid_point(int i) { return i / 51.0; }

}  // namespace

TEST_CASE("nineteen specs with rotations only for Clayton, Gumbel and Joe") {
  const auto specs = all_copula_specs();
  CHECK(specs.size() == 19);
  int rotated = 0;
  for (const auto& s : specs) {
    if (s.rotation != Rotation::Deg0) {
      ++rotated;
      CHECK(admits_rotation(s.family));
    }
    CHECK(to_code(from_code(to_code(s))) == to_code(s));
  }
  CHECK(rotated == 9);
  CHECK(to_code(from_code("C180")) == "C180");
  CHECK(to_code(from_code("HO")) == "HO");
  CHECK_THROWS(from_code("C45"));
  CHECK_THROWS(from_code("XYZ"));
  CHECK_THROWS_AS(Copula(CopulaFamily::Frank, Rotation::Deg90, 2.0), InvalidParameter);
}

TEST_CASE("cdf examples") {
  CHECK(cdf(with_natural(CopulaFamily::Gaussian, Rotation::Deg0, 0.0), 0.3, 0.7) == doctest::Approx(0.21).epsilon(1e-14));
  CHECK(Copula(CopulaFamily::Clayton, Rotation::Deg0, 1.0).cdf(0.5, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(Copula(CopulaFamily::Gumbel, Rotation::Deg0, 1.0).cdf(0.3, 0.7) == doctest::Approx(0.21).epsilon(1e-14));
  // Clayton closed form by hand at an asymmetric point
  const double u = 0.2, v = 0.9, th = 2.5;
  CHECK(Copula(CopulaFamily::Clayton, Rotation::Deg0, th).cdf(u, v) ==
        doctest::Approx(std::pow(std::pow(u, -th) + std::pow(v, -th) - 1.0, -1.0 / th)).epsilon(1e-13));
}

TEST_CASE("out-of-domain parameters are rejected") {
  CHECK_THROWS_AS(Copula(CopulaFamily::Gaussian, Rotation::Deg0, 1.5), InvalidParameter);
  CHECK_THROWS_AS(Copula(CopulaFamily::Clayton, Rotation::Deg0, -0.5), InvalidParameter);
  CHECK_THROWS_AS(Copula(CopulaFamily::Gumbel, Rotation::Deg0, 0.9), InvalidParameter);
  CHECK_THROWS_AS(Copula(CopulaFamily::Plackett, Rotation::Deg0, -1.0), InvalidParameter);
  CHECK_THROWS_AS(Copula(CopulaFamily::FGM, Rotation::Deg0, 1.2), InvalidParameter);
}

TEST_CASE("rotation algebra") {
  const Copula clayton(CopulaFamily::Clayton, Rotation::Deg0, 1.0);
  auto base = [&](double u, double v) { return clayton.cdf(u, v); };
  auto r180 = [&](double u, double v) { return rotate_cdf(base, Rotation::Deg180, u, v); };
  CHECK(rotate_cdf(r180, Rotation::Deg180, 0.5, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  auto indep = [](double u, double v) { return u * v; };
  CHECK(rotate_cdf(indep, Rotation::Deg90, 0.3, 0.7) == doctest::Approx(0.7 - 0.7 * 0.7).epsilon(1e-14));

  for (Rotation r : {Rotation::Deg0, Rotation::Deg90, Rotation::Deg180, Rotation::Deg270}) {
    for (double u : {0.1, 0.45, 0.93}) {
      CHECK(rotate_cdf(base, r, u, 1.0) == doctest::Approx(u).epsilon(1e-13));
      CHECK(rotate_cdf(base, r, 1.0, u) == doctest::Approx(u).epsilon(1e-13));
      CHECK(std::abs(rotate_cdf(base, r, u, 0.0)) < 1e-13);
    }
  }

  // the Copula class agrees with the generic rotation of its own base
  for (Rotation r : {Rotation::Deg90, Rotation::Deg180, Rotation::Deg270}) {
    const Copula rot(CopulaFamily::Joe, r, 2.7);
    const Copula joe(CopulaFamily::Joe, Rotation::Deg0, 2.7);
    auto jb = [&](double u, double v) { return joe.cdf(u, v); };
    for (int i = 1; i < 10; ++i)
      for (int j = 1; j < 10; ++j)
        CHECK(rot.cdf(i / 10.0, j / 10.0) == doctest::Approx(rotate_cdf(jb, r, i / 10.0, j / 10.0)).epsilon(1e-12));
  }
}

TEST_CASE("180 degree rotation applied twice is the identity on the grid") {
  for (const CopulaSpec& s : grid_specs()) {
    if (!admits_rotation(s.family) || s.rotation != Rotation::Deg0) continue;
    const Copula c = Copula::from_spec(s);
    auto base = [&](double u, double v) { return c.cdf(u, v); };
    auto r180 = [&](double u, double v) { return rotate_cdf(base, Rotation::Deg180, u, v); };
    double worst = 0.0;
    for (int i = 1; i <= 50; ++i)
      for (int j = 1; j <= 50; ++j) {
        const double u = grid_point(i), v = grid_point(j);
        worst = std::max(worst, std::abs(rotate_cdf(r180, Rotation::Deg180, u, v) - c.cdf(u, v)));
      }
    INFO(label(s));
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("grid properties: bounds, margins, monotonicity and 2-increasing") {
  for (const CopulaSpec& s : grid_specs()) {
    INFO(label(s));
    const Copula c = Copula::from_spec(s);
    double bound_violation = 0.0, margin_error = 0.0, rect_min = 0.0, mono_min = 0.0;
    std::vector<std::vector<double>> C(52, std::vector<double>(52));
    for (int i = 0; i <= 51; ++i)
      for (int j = 0; j <= 51; ++j) C[i][j] = c.cdf(grid_point(i), grid_point(j));
    for (int i = 0; i <= 51; ++i) {
      const double u = grid_point(i);
      margin_error = std::max({margin_error, std::abs(C[i][51] - u), std::abs(C[51][i] - u), std::abs(C[i][0]),
                               std::abs(C[0][i])});
      for (int j = 0; j <= 51; ++j) {
        const double v = grid_point(j);
        bound_violation = std::max({bound_violation, std::max(u + v - 1.0, 0.0) - C[i][j], C[i][j] - std::min(u, v)});
        if (i > 0) mono_min = std::min(mono_min, C[i][j] - C[i - 1][j]);
        if (j > 0) mono_min = std::min(mono_min, C[i][j] - C[i][j - 1]);
        if (i > 0 && j > 0) rect_min = std::min(rect_min, C[i][j] - C[i - 1][j] - C[i][j - 1] + C[i - 1][j - 1]);
      }
    }
    CHECK(bound_violation <= 1e-10);
    CHECK(margin_error <= 1e-10);
    CHECK(mono_min >= -1e-12);
    CHECK(rect_min >= -1e-12);
  }
}

TEST_CASE("partial derivatives match central differences of the cdf") {
  for (const CopulaSpec& s : grid_specs()) {
    INFO(label(s));
    const Copula c = Copula::from_spec(s);
    double worst = 0.0;
    for (int i = 2; i <= 49; i += 3)
      for (int j = 2; j <= 49; j += 3) {
        const double u = grid_point(i), v = grid_point(j), h = 1e-6;
        const double fd_u = (c.cdf(u + h, v) - c.cdf(u - h, v)) / (2 * h);
        const double fd_v = (c.cdf(u, v + h) - c.cdf(u, v - h)) / (2 * h);
        const CopulaDerivatives d = c.derivatives(u, v);
        worst = std::max({worst, std::abs(d.du - fd_u), std::abs(d.dv - fd_v), std::abs(c.partial_u(u, v) - fd_u),
                          std::abs(c.partial_v(u, v) - fd_v)});
        CHECK(c.partial_u(u, v) >= 0.0);
        CHECK(c.partial_u(u, v) <= 1.0);
        CHECK(c.partial_v(u, v) >= 0.0);
        CHECK(c.partial_v(u, v) <= 1.0);
      }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("dependence-parameter derivative matches differences in theta") {
  for (const CopulaSpec& s : grid_specs()) {
    INFO(label(s));
    const double th = s.natural();
    const double h = 1e-6 * std::max(1.0, std::abs(th));
    // stay inside closed domains at their edges
    const double lo = in_domain(th - h, s.family) ? th - h : th;
    const double hi = in_domain(th + h, s.family) ? th + h : th;
    const Copula a(s.family, s.rotation, lo, s.df()), b(s.family, s.rotation, hi, s.df());
    const Copula c = Copula::from_spec(s);
    for (double u : {0.15, 0.5, 0.8})
      for (double v : {0.25, 0.6, 0.9}) {
        const double fd = (b.cdf(u, v) - a.cdf(u, v)) / (hi - lo);
        CHECK(c.derivatives(u, v).dtheta == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
  }
}

TEST_CASE("partial derivative examples") {
  const CopulaSpec indep = with_natural(CopulaFamily::Gaussian, Rotation::Deg0, 0.0);
  CHECK(partial_u(indep, 0.3, 0.7) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(partial_v(indep, 0.3, 0.7) == doctest::Approx(0.3).epsilon(1e-12));
  const Copula clayton(CopulaFamily::Clayton, Rotation::Deg0, 1.0);
  const double h = 1e-5;
  CHECK(clayton.partial_u(0.5, 0.5) ==
        doctest::Approx((clayton.cdf(0.5 + h, 0.5) - clayton.cdf(0.5 - h, 0.5)) / (2 * h)).epsilon(1e-6));
  for (const CopulaSpec& s : all_copula_specs()) {
    INFO(to_code(s));
    CHECK(partial_u(s, 0.37, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(partial_v(s, 1.0, 0.37) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("links") {
  CHECK(link(0.0, CopulaFamily::Gaussian) == 0.0);
  CHECK(link(0.0, CopulaFamily::Clayton) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(unlink(link(2.0, CopulaFamily::Gaussian), CopulaFamily::Gaussian) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_THROWS(unlink(1.0, CopulaFamily::Gaussian));
  CHECK_THROWS(unlink(0.0, CopulaFamily::Clayton));
  CHECK_THROWS(unlink(0.5, CopulaFamily::Gumbel));
  CHECK_THROWS(unlink(1.5, CopulaFamily::Hougaard));

  const std::vector<CopulaFamily> families = {CopulaFamily::Gaussian, CopulaFamily::StudentT, CopulaFamily::Frank,
                                              CopulaFamily::Plackett, CopulaFamily::AMH,      CopulaFamily::FGM,
                                              CopulaFamily::Hougaard, CopulaFamily::Clayton,  CopulaFamily::Gumbel,
                                              CopulaFamily::Joe};
  for (CopulaFamily f : families) {
    INFO(family_name(f));
    for (double t = -12.0; t <= 12.0; t += 0.75) {
      const double th = link(t, f);
      CHECK(in_domain(th, f));
      // tanh saturates in double precision beyond |t| ~ 8, so the round trip
      // from the optimizer scale is only exact on a moderate range
      if (std::abs(t) <= 6.0 && !(f == CopulaFamily::Frank && std::abs(t) < kFrankGuard))
        CHECK(unlink(th, f) == doctest::Approx(t).epsilon(1e-10).scale(1.0));
      CHECK(link(unlink(th, f), f) == doctest::Approx(th).epsilon(1e-10).scale(1.0));
      const double h = 1e-6;
      CHECK(link_derivative(t, f) ==
            doctest::Approx((link(t + h, f) - link(t - h, f)) / (2 * h)).epsilon(1e-6).scale(1e-3));
    }
    // saturation never reaches the boundary of open domains
    for (double t : {-40.0, 40.0}) CHECK(std::isfinite(link(t, f)));
  }
  CHECK(std::abs(link(0.0, CopulaFamily::Frank)) >= kFrankGuard);
}

TEST_CASE("kendall tau closed forms and inverse") {
  CHECK(kendall_tau(with_natural(CopulaFamily::Clayton, Rotation::Deg0, 2.0)) == doctest::Approx(0.5));
  CHECK(kendall_tau(with_natural(CopulaFamily::Gumbel, Rotation::Deg0, 2.0)) == doctest::Approx(0.5));
  CHECK(kendall_tau(with_natural(CopulaFamily::Gaussian, Rotation::Deg0, 0.8)) ==
        doctest::Approx(2.0 / M_PI * std::asin(0.8)));
  CHECK(kendall_tau(with_natural(CopulaFamily::Clayton, Rotation::Deg90, 2.0)) == doctest::Approx(-0.5));
  for (CopulaFamily f : {CopulaFamily::Gaussian, CopulaFamily::Frank, CopulaFamily::Clayton, CopulaFamily::Gumbel,
                         CopulaFamily::Joe, CopulaFamily::Hougaard}) {
    const double th = theta_for_tau(f, 0.4);
    CHECK(kendall_tau(with_natural(f, Rotation::Deg0, th)) == doctest::Approx(0.4).epsilon(1e-9));
  }
}

TEST_CASE("samplers: independence, Gaussian tau and uniform margins") {
  std::mt19937_64 rng(20240601);
  const int n = 100000;
  {
    const CopulaSpec indep = with_natural(CopulaFamily::Gaussian, Rotation::Deg0, 0.0);
    std::vector<double> u(n), v(n);
    for (int i = 0; i < n; ++i) std::tie(u[i], v[i]) = sample_pair(indep, rng);
    CHECK(std::abs(testing::pearson(u, v)) < 0.01);
  }
  {
    const CopulaSpec g = with_natural(CopulaFamily::Gaussian, Rotation::Deg0, 0.8);
    std::vector<std::pair<double, double>> xy(n);
    for (int i = 0; i < n; ++i) xy[i] = sample_pair(g, rng);
    CHECK(std::abs(testing::kendall_tau(xy) - 2.0 / M_PI * std::asin(0.8)) < 0.02);
  }
}

TEST_CASE("every sampler has uniform margins and the family's Kendall tau") {
  std::mt19937_64 rng(77);
  for (const CopulaSpec& s : grid_specs()) {
    INFO(label(s));
    const int n = 100000;
    std::vector<double> u(n), v(n);
    std::vector<std::pair<double, double>> xy(n);
    for (int i = 0; i < n; ++i) {
      xy[i] = sample_pair(s, rng);
      u[i] = xy[i].first;
      v[i] = xy[i].second;
    }
    CHECK(testing::ks_uniform(u) < 0.01);
    CHECK(testing::ks_uniform(v) < 0.01);
    if (s.family != CopulaFamily::Plackett) CHECK(std::abs(testing::kendall_tau(xy) - kendall_tau(s)) < 0.02);
  }
}

TEST_CASE("Plackett sampler reproduces the cdf on a coarse grid") {
  std::mt19937_64 rng(3);
  const Copula c(CopulaFamily::Plackett, Rotation::Deg0, 6.0);
  const int n = 100000;
  std::vector<std::pair<double, double>> xy(n);
  for (auto& p : xy) p = c.sample(rng);
  for (double a : {0.25, 0.5, 0.75})
    for (double b : {0.25, 0.5, 0.75}) {
      double hits = 0;
      for (auto& p : xy) hits += (p.first <= a && p.second <= b);
      CHECK(std::abs(hits / n - c.cdf(a, b)) < 0.006);
    }
}
