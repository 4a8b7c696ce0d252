#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"

#include "copbp/datasim.hpp"
#include "support.hpp"

using namespace copbp;

namespace {

CopulaSpec gaussian(double rho) { return with_natural(CopulaFamily::Gaussian, Rotation::Deg0, rho); }

Eigen::VectorXd eta(const PanelTable& t, const Eigen::VectorXd& beta, double z_coef, int n_z, double peace_effect) {
  Eigen::VectorXd e = Eigen::VectorXd::Constant(t.rows(), beta[0]);
  for (Eigen::Index j = 1; j < beta.size(); ++j) e += beta[j] * t.column("c" + std::to_string(j));
  for (int j = 1; j <= n_z; ++j) e += z_coef * t.column("z" + std::to_string(j));
  e += peace_effect * t.column("peace").unaryExpr([](double p) { return std::exp(-p / 5.0); });
  return e;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("generated table layout and truth record") {
  DgpSpec d;
  d.n_rows = 200;
  d.n_instruments = 3;
  d.copula_true = with_natural(CopulaFamily::Clayton, Rotation::Deg0, 2.0);
  const auto [t, truth] = generate(d);
  CHECK(t.rows() == 200);
  CHECK(t.names() == std::vector<std::string>{"row_id", "dyad", "year", "treat", "conflict", "c1", "c2", "z1", "z2",
                                              "z3", "peace"});
  for (double v : t.column("treat")) CHECK((v == 0.0 || v == 1.0));
  CHECK(truth.kendall_tau == doctest::Approx(0.5));
  CHECK(truth.treatment_prevalence == t.column("treat").mean());
  const Eigen::VectorXd peace = t.column("peace");
  CHECK(peace.minCoeff() >= 0.0);
  CHECK(peace.maxCoeff() <= 30.0);

  const ModelSpec spec = dgp_model_spec(d, true);
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.instruments.size() == 3);
  CHECK(spec.eq2_smooths.size() == 1);

  DgpSpec bad = d;
  bad.n_rows = 0;
  CHECK_THROWS_AS(generate(bad), std::invalid_argument);
  bad = d;
  bad.beta2_true = Eigen::Vector2d(0, 1);
  CHECK_THROWS_AS(generate(bad), std::invalid_argument);
}

TEST_CASE("independence: residuals are uncorrelated") {
  DgpSpec d;
  d.n_rows = 50000;
  d.copula_true = gaussian(0.0);
  d.seed = 3;
  const auto [t, truth] = generate(d);
  const Eigen::VectorXd e1 = eta(t, d.beta1_true, d.instrument_strength, d.n_instruments, 0.0);
  const Eigen::VectorXd e2 = eta(t, d.beta2_true, 0.0, 0, d.peace_effect);
  const Eigen::VectorXd y1 = t.column("treat"), y2 = t.column("conflict");
  Eigen::VectorXd r1(t.rows()), r2(t.rows());
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    r1[i] = y1[i] - testing::Phi(e1[i]);
    r2[i] = y2[i] - testing::Phi(e2[i] + d.gamma_true * y1[i]);
  }
  CHECK(std::abs(testing::pearson(to_vec(r1), to_vec(r2))) < 0.02);
  // instruments never enter the outcome equation
  for (int j = 1; j <= d.n_instruments; ++j)
    CHECK(std::abs(testing::pearson(to_vec(t.column("z" + std::to_string(j))), to_vec(r2))) < 0.02);
}

TEST_CASE("strong dependence without a causal effect still associates the outcomes") {
  DgpSpec d;
  d.n_rows = 20000;
  d.copula_true = with_natural(CopulaFamily::Clayton, Rotation::Deg180, 2.0);
  d.seed = 4;
  const auto [t, truth] = generate(d);
  const Eigen::VectorXd y1 = t.column("treat"), y2 = t.column("conflict");
  double n[2][2] = {{0, 0}, {0, 0}};
  for (Eigen::Index i = 0; i < t.rows(); ++i) n[static_cast<int>(y1[i])][static_cast<int>(y2[i])] += 1.0;
  const double N = static_cast<double>(t.rows());
  double chi2 = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double e = (n[a][0] + n[a][1]) * (n[0][b] + n[1][b]) / N;
      chi2 += (n[a][b] - e) * (n[a][b] - e) / e;
    }
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(1), chi2));
  CHECK(p < 1e-6);
  CHECK(truth.true_ate == 0.0);
}

TEST_CASE("fixed seed reproduces the table byte for byte") {
  DgpSpec d;
  d.n_rows = 500;
  d.seed = 77;
  d.copula_true = with_natural(CopulaFamily::Joe, Rotation::Deg90, 2.5);
  std::ostringstream a, b, c;
  write_csv(generate(d).first, a);
  write_csv(generate(d).first, b);
  CHECK(a.str() == b.str());
  d.seed = 78;
  write_csv(generate(d).first, c);
  CHECK(a.str() != c.str());
}

TEST_CASE("true effect") {
  DgpSpec d;
  d.n_rows = 300;
  const auto [t, truth] = generate(d);
  CHECK(true_ate(d, t) == 0.0);

  DgpSpec flat;
  flat.beta1_true = Eigen::VectorXd::Zero(1);
  flat.beta2_true = Eigen::VectorXd::Zero(1);
  flat.gamma_true = 1.959964;
  flat.n_rows = 10;
  const auto [t2, truth2] = generate(flat);
  CHECK(std::abs(truth2.true_ate - 0.475) < 1e-6);
}

TEST_CASE("true effect agrees with a structural simulation") {
  DgpSpec d;
  d.n_rows = 1000000;
  d.gamma_true = -0.4;
  d.peace_effect = 0.8;
  d.copula_true = with_natural(CopulaFamily::Gumbel, Rotation::Deg0, 2.0);
  d.seed = 8;
  const auto [t, truth] = generate(d);
  // intervene on the treatment for every row; one uniform latent draw per row
  const Eigen::VectorXd e2 = eta(t, d.beta2_true, 0.0, 0, d.peace_effect);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ud;
  double diff = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const double v = ud(rng);
    diff += (v <= testing::Phi(e2[i] + d.gamma_true) ? 1.0 : 0.0) - (v <= testing::Phi(e2[i]) ? 1.0 : 0.0);
  }
  CHECK(std::abs(truth.true_ate - diff / static_cast<double>(t.rows())) < 0.002);
  CHECK(truth.true_ate < 0.0);
}

TEST_CASE("treatment prevalence rises with the treatment intercept") {
  double prev = -1.0;
  for (double b0 : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
    DgpSpec d;
    d.n_rows = 4000;
    d.beta1_true[0] = b0;
    const double p = generate(d).second.treatment_prevalence;
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("true effect does not depend on the copula") {
  DgpSpec d;
  d.n_rows = 3000;
  d.gamma_true = 0.5;
  d.seed = 21;
  d.copula_true = gaussian(0.0);
  const double ref = generate(d).second.true_ate;
  for (const CopulaSpec& c : {with_natural(CopulaFamily::Clayton, Rotation::Deg180, 3.0),
                              with_natural(CopulaFamily::StudentT, Rotation::Deg0, 0.5),
                              with_natural(CopulaFamily::Frank, Rotation::Deg0, -4.0)}) {
    d.copula_true = c;
    CHECK(generate(d).second.true_ate == ref);
  }
}

TEST_CASE("default scenario has a rare outcome") {
  DgpSpec d;
  d.n_rows = 20000;
  const TruthRecord t = generate(d).second;
  CHECK(t.outcome_prevalence > 0.02);
  CHECK(t.outcome_prevalence < 0.08);
}
