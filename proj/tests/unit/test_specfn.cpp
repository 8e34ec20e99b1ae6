#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "crossview/specfn.hpp"
#include "doctest.h"
#include "support/test_support.hpp"

using namespace crossview;
using crossview::testing::Uniform;

TEST_CASE("log_gamma identities") {
  CHECK(std::fabs(log_gamma(1.0)) <= 1e-10);
  CHECK(std::fabs(log_gamma(2.0)) <= 1e-10);
  CHECK(std::fabs(log_gamma(5.0) - std::log(24.0)) <= 1e-10);
  CHECK(std::fabs(log_gamma(0.5) - 0.5 * std::log(std::numbers::pi)) <= 1e-10);
  CHECK(log_gamma(5.0) == doctest::Approx(3.1780538).epsilon(1e-7));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5723649).epsilon(1e-7));
}

TEST_CASE("log_gamma agrees with the C library over its range") {
  // Absolute 1e-10 is representable only while |ln Gamma| stays moderate;
  // above that the comparison is relative to the magnitude.
  for (double x = 1e-3; x <= 1e6; x *= 1.37) {
    const double want = std::lgamma(x);
    const double tol = std::max(1e-10, 4e-15 * std::fabs(want));
    CHECK_MESSAGE(std::fabs(log_gamma(x) - want) <= tol, "x = " << x);
  }
}

TEST_CASE("log_gamma recurrence") {
  Uniform u(11);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(1e-3, 100.0);
    CHECK(std::fabs(log_gamma(x + 1.0) - log_gamma(x) - std::log(x)) <= 1e-9);
  }
}

TEST_CASE("digamma recurrence and Euler constant") {
  CHECK(digamma(2.0) - digamma(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  const double fd = crossview::testing::richardson_derivative(log_gamma, 1.0, 1e-6);
  CHECK(fd == doctest::Approx(-0.5772157).epsilon(1e-6));
  CHECK(std::fabs(digamma(1.0) - fd) <= 1e-6);
  CHECK(std::fabs(digamma(1.0) + 0.5772156649015329) <= 1e-8);
}

TEST_CASE("digamma(10) matches the plain central difference") {
  const double h = 1e-5;
  const double fd = (log_gamma(10.0 + h) - log_gamma(10.0 - h)) / (2.0 * h);
  CHECK(std::fabs(digamma(10.0) - fd) <= 1e-6);
}

TEST_CASE("digamma matches finite differences of log_gamma on random points") {
  Uniform u(12);
  for (int i = 0; i < 1000; ++i) {
    // Log-uniform coverage of [0.01, 1000]; step scaled to the argument.
    // Relative error with a unit floor, since digamma crosses zero near 1.46.
    const double x = std::exp(u(std::log(0.01), std::log(1000.0)));
    const double fd = crossview::testing::richardson_derivative(log_gamma, x, 1e-4 * x);
    CHECK_MESSAGE(crossview::testing::relative_error(digamma(x), fd, 1.0) <= 1e-6, "x = " << x);
  }
}

TEST_CASE("log_beta closed forms") {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  CHECK(log_beta(ones) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  const std::vector<double> twos{2.0, 2.0};
  CHECK(log_beta(twos) == doctest::Approx(std::log(1.0 / 6.0)).epsilon(1e-12));
  const std::vector<double> mixed{2.0, 3.0, 4.0};
  CHECK(log_beta(mixed) == doctest::Approx(std::log(12.0 / 40320.0)).epsilon(1e-12));
  CHECK(log_beta(mixed) == doctest::Approx(-8.1196962).epsilon(1e-7));
}

TEST_CASE("log_beta is permutation invariant") {
  Uniform u(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> alpha(static_cast<std::size_t>(u.integer(2, 8)));
    for (double& a : alpha) a = u(0.01, 50.0);
    const double base = log_beta(alpha);
    std::vector<double> reversed(alpha.rbegin(), alpha.rend());
    std::vector<double> rotated(alpha);
    std::rotate(rotated.begin(), rotated.begin() + 1, rotated.end());
    CHECK(std::fabs(log_beta(reversed) - base) <= 1e-12 * std::max(1.0, std::fabs(base)));
    CHECK(std::fabs(log_beta(rotated) - base) <= 1e-12 * std::max(1.0, std::fabs(base)));
  }
}

TEST_CASE("special functions reject invalid arguments") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  for (double bad : {0.0, -1.0, -0.5, nan, inf}) {
    CHECK_THROWS_AS(log_gamma(bad), std::domain_error);
    CHECK_THROWS_AS(digamma(bad), std::domain_error);
  }
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(log_beta(one), std::domain_error);
  const std::vector<double> with_zero{1.0, 0.0};
  CHECK_THROWS_AS(log_beta(with_zero), std::domain_error);
}
