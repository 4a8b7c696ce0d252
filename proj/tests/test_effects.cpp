#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "copbp/datasim.hpp"
#include "copbp/effects.hpp"
#include "support.hpp"

using namespace copbp;

namespace {

const CopulaSpec kGauss = with_natural(CopulaFamily::Gaussian, Rotation::Deg0, 0.3);

struct Fitted {
  PanelTable data;
  FitResult fit;
};

const Fitted& fitted_example() {
  static const Fitted f = [] {
    PanelTable data = testing::small_panel(1200, 77, 0.3);
    FitResult r = fit(data, testing::small_spec(kGauss));
    return Fitted{std::move(data), std::move(r)};
  }();
  return f;
}

PanelTable stack(const PanelTable& a, const PanelTable& b) {
  Eigen::MatrixXd v(a.rows() + b.rows(), a.cols());
  v << a.values(), b.values();
  return PanelTable(a.names(), v);
}

}  // namespace

TEST_CASE("point effect formula") {
  CHECK(ate_point(Eigen::VectorXd::Zero(1), 1.959964) == doctest::Approx(0.475).epsilon(1e-6));
  CHECK(std::abs(ate_point(Eigen::VectorXd::Zero(1), 1.959964) - 0.475) < 1e-6);
  const Eigen::Vector3d eta(-1.0, 0.2, 2.5);
  CHECK(ate_point(eta, 0.0) == 0.0);
  double ref = 0.0;
  for (double e : eta) ref += testing::Phi(e - 0.4) - testing::Phi(e);
  CHECK(ate_point(eta, -0.4) == doctest::Approx(ref / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(ate_point(Eigen::VectorXd(0), 0.1), std::invalid_argument);
}

TEST_CASE("quantile interpolates between order statistics") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({1.0, 2.0}, 0.0) == 1.0);
  CHECK(quantile({1.0, 2.0}, 1.0) == 2.0);
  CHECK(quantile({0.0, 10.0}, 0.25) == doctest::Approx(2.5));
  CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("simulated effect: shape, reproducibility and sign") {
  const auto& [data, f] = fitted_example();
  REQUIRE(f.converged);
  REQUIRE(f.info_positive_definite);
  AteOptions opt;
  opt.seed = 42;
  const AteResult a = ate(f, data, opt);
  CHECK(a.draws.size() == kDefaultSimulations);
  CHECK(a.n_sims == 250);
  CHECK(a.ci_lower <= a.ci_upper);
  const AteResult b = ate(f, data, opt);
  CHECK(a.point == b.point);
  CHECK(a.ci_lower == b.ci_lower);
  CHECK(a.ci_upper == b.ci_upper);
  CHECK((a.draws.array() == b.draws.array()).all());

  opt.seed = 43;
  const AteResult c = ate(f, data, opt);
  CHECK((a.draws.array() != c.draws.array()).any());
  CHECK(c.point == a.point);

  const double g = f.estimates[f.index_of("gamma")];
  CHECK((a.point > 0) == (g > 0));
  CHECK((a.point < 0) == (g < 0));

  // the first draws do not depend on how many are requested
  opt.seed = 42;
  opt.n_sims = 10;
  const AteResult d = ate(f, data, opt);
  CHECK((d.draws.array() == a.draws.head(10).array()).all());
}

TEST_CASE("zero treatment coefficient gives exactly zero effect") {
  const auto& [data, base] = fitted_example();
  FitResult f = base;
  f.estimates[f.index_of("gamma")] = 0.0;
  CHECK(ate(f, data).point == 0.0);
}

TEST_CASE("point effect is invariant to row order and duplication") {
  const auto& [data, f] = fitted_example();
  const double p = ate(f, data).point;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(data.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
  CHECK(ate(f, data.subset(perm)).point == doctest::Approx(p).epsilon(1e-13));
  CHECK(ate(f, stack(data, data)).point == doctest::Approx(p).epsilon(1e-13));
}

TEST_CASE("interval Monte Carlo error shrinks with more simulations") {
  // Percentile intervals from few draws are biased narrow, so the width itself
  // grows toward its limit as draws are added. What shrinks is the distance to
  // that limit, estimated here from 20000 draws.
  const auto& [data, f] = fitted_example();
  const AteResult ref = ate(f, data, {20000, 0.05, 999, false});
  const double limit = ref.ci_upper - ref.ci_lower;
  int closer = 0;
  const int trials = 10;
  for (int s = 0; s < trials; ++s) {
    const auto seed = static_cast<std::uint64_t>(100 + s);
    const AteResult a = ate(f, data, {50, 0.05, seed, false});
    const AteResult b = ate(f, data, {2000, 0.05, seed, false});
    if (std::abs(b.ci_upper - b.ci_lower - limit) <= std::abs(a.ci_upper - a.ci_lower - limit)) ++closer;
  }
  CHECK(closer >= 8);
}

TEST_CASE("effect on the treated averages over treated rows only") {
  const auto& [data, f] = fitted_example();
  AteOptions opt;
  opt.treated_only = true;
  const AteResult a = ate(f, data, opt);
  CHECK(a.treated_only);
  const ParamVector pv = f.params();
  const Eigen::MatrixXd X2 = f.layout->eq2.matrix(data);
  double s = 0.0;
  int n = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (data.column("y1")[i] != 1.0) continue;
    const double e = X2.row(i).dot(pv.beta2);
    s += testing::Phi(e + pv.gamma) - testing::Phi(e);
    ++n;
  }
  CHECK(a.point == doctest::Approx(s / n).epsilon(1e-12));
}

TEST_CASE("refusals") {
  const auto& [data, base] = fitted_example();
  FitResult f = base;
  f.info_positive_definite = false;
  CHECK_THROWS_AS(ate(f, data), std::invalid_argument);
  f = base;
  f.converged = false;
  CHECK_THROWS_AS(ate(f, data), std::invalid_argument);
  f = base;
  f.vcov(0, 0) = -1.0;
  CHECK_THROWS_AS(ate(f, data), std::invalid_argument);
  FitResult single;
  CHECK_THROWS_AS(ate(single, data), std::invalid_argument);
  CHECK_THROWS_AS(copula_sensitivity(data, testing::small_spec(kGauss), {}), std::invalid_argument);
}

TEST_CASE("sensitivity sweep over all copulas on null data") {
  DgpSpec dgp;
  dgp.n_rows = 5000;
  dgp.seed = 9;
  dgp.copula_true = with_natural(CopulaFamily::Gaussian, Rotation::Deg0, 0.0);
  const auto [data, truth] = generate(dgp);
  AteOptions opt;
  opt.n_sims = 50;
  const SensitivityReport rep = copula_sensitivity(data, dgp_model_spec(dgp), all_copula_specs(), opt);
  REQUIRE(rep.records.size() == 19);

  int converged = 0, null = 0;
  bool seen_failure = false;
  std::optional<double> prev;
  for (const auto& r : rep.records) {
    const bool usable = r.converged && r.gamma_z.has_value();
    if (!usable) {
      seen_failure = true;
      CHECK_FALSE(r.ate.has_value());
      continue;
    }
    CHECK_FALSE(seen_failure);  // failures sort last
    if (prev) CHECK(*r.gamma_z >= *prev);
    prev = r.gamma_z;
    ++converged;
    if (std::abs(*r.gamma_z) < kZCritical05) ++null;
    REQUIRE(r.ate.has_value());
    CHECK(r.ate->draws.size() == 50);
  }
  CHECK(converged >= 15);
  CHECK(null >= 0.9 * converged);
}
