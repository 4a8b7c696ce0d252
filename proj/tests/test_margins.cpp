#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "copbp/margins.hpp"
#include "support.hpp"

using namespace copbp;

TEST_CASE("probit values") {
  CHECK(probit(0.0) == 0.5);
  CHECK(probit(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  // tail values from a 50-digit reference
  CHECK(probit(-5.0) == doctest::Approx(2.866515718791939e-07).epsilon(1e-12));
  CHECK(probit(-10.0) == doctest::Approx(7.619853024160527e-24).epsilon(1e-12));
  CHECK(probit(3.0) == doctest::Approx(0.9986501019683699).epsilon(1e-15));
}

TEST_CASE("probit symmetry and monotonicity") {
  double prev = -1.0;
  for (double x = -8.0; x <= 8.0; x += 0.01) {
    CHECK(std::abs(probit(-x) - (1.0 - probit(x))) < 1e-12);
    // above ~7.5 the value rounds to 1 in double precision, so only
    // non-decrease can hold there
    if (x < 7.5) CHECK(probit(x) > prev);
    else CHECK(probit(x) >= prev);
    prev = probit(x);
  }
}

TEST_CASE("probit inverse round trip and domain") {
  CHECK(probit_inv(probit(0.7)) == doctest::Approx(0.7).epsilon(1e-8));
  // the upper tail stops at 5.5: beyond it 1 - probit(x) keeps too few digits
  for (double x = -7.0; x <= 5.5; x += 0.25) CHECK(std::abs(probit_inv(probit(x)) - x) < 1e-8);
  CHECK(probit_inv(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  CHECK_THROWS_AS(probit_inv(0.0), std::domain_error);
  CHECK_THROWS_AS(probit_inv(1.0), std::domain_error);
  CHECK_THROWS_AS(probit_inv(-0.2), std::domain_error);
}

TEST_CASE("log probit stays finite in the far tail") {
  CHECK(log_probit(-10.0) == doctest::Approx(-53.2312851505125).epsilon(1e-12));
  CHECK(log_probit(-40.0) == doctest::Approx(-804.608442013754).epsilon(1e-12));
  CHECK(log_probit(-100.0) == doctest::Approx(-5005.52420869420508862630245733).epsilon(1e-14));
  // either side of the switch to the asymptotic series
  CHECK(log_probit(-36.9) == doctest::Approx(-685.332883165350612).epsilon(1e-13));
  CHECK(log_probit(-37.1) == doctest::Approx(-692.738280715623293).epsilon(1e-13));
  CHECK(std::isfinite(log_probit(-1e4)));
  for (double x : {-3.0, 0.0, 2.0}) CHECK(log_probit(x) == doctest::Approx(std::log(probit(x))).epsilon(1e-14));
  CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-15));
}

TEST_CASE("linear predictor examples") {
  LinearPredictor lp;
  lp.coefficients = Eigen::VectorXd::Zero(1);
  CHECK(eta(lp, {}) == 0.0);

  lp.coefficients << 1.5;
  CHECK(eta(lp, {{"unused", 9.0}}) == 1.5);

  LinearPredictor two;
  two.design_columns = {"a", "b"};
  two.coefficients = Eigen::Vector3d(0.0, 0.5, -0.25);
  CHECK(eta(two, {{"a", 1.0}, {"b", 2.0}}) == 0.0);
  CHECK(two.expected_size() == 3);

  CHECK_THROWS_AS(eta(two, {{"a", 1.0}}), MissingColumn);
}

TEST_CASE("linear predictor with a smooth term") {
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(31, 0.0, 30.0);
  const SplineBasis sb = build_spline_basis(x, 6, "s");
  LinearPredictor lp;
  lp.design_columns = {"a"};
  lp.smooth_terms = {sb.term};
  CHECK(lp.expected_size() == 2 + 5);

  lp.coefficients = Eigen::VectorXd::Zero(7);
  lp.coefficients[0] = 0.25;
  lp.coefficients[1] = 2.0;
  // zero spline coefficients contribute nothing
  CHECK(eta(lp, {{"a", 1.0}, {"s", 13.7}}) == 2.25);

  lp.coefficients.tail(5) << 0.3, -0.1, 0.2, 0.5, -0.4;
  const double smooth = sb.term.evaluate(13.7).dot(lp.coefficients.tail(5));
  CHECK(eta(lp, {{"a", 1.0}, {"s", 13.7}}) == doctest::Approx(2.25 + smooth).epsilon(1e-14));
  CHECK_THROWS_AS(eta(lp, {{"a", 1.0}}), MissingColumn);

  lp.coefficients = Eigen::VectorXd::Zero(3);
  CHECK_THROWS(eta(lp, {{"a", 1.0}, {"s", 1.0}}));
}
