#include "crossview/specfn.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace crossview {

namespace {

void require_positive(double x, const char* fn) {
  if (!std::isfinite(x) || !(x > 0.0)) {
    throw std::domain_error(std::string(fn) + ": argument must be finite and > 0, got " +
                            std::to_string(x));
  }
}

// Stirling series is accurate to ~1e-15 once the argument is above this.
constexpr double kStirlingThreshold = 10.0;

double stirling_log_gamma(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_{2n} / (2n (2n-1) x^{2n-1}), Horner form in 1/x^2.
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 +
                                                     inv2 * (1.0 / 156.0)))))));
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x >= kStirlingThreshold) {
    return stirling_log_gamma(x);
  }
  // Gamma(x) = Gamma(x + n) / (x (x+1) ... (x+n-1))
  double product = 1.0;
  double shifted = x;
  while (shifted < kStirlingThreshold) {
    product *= shifted;
    shifted += 1.0;
  }
  return stirling_log_gamma(shifted) - std::log(product);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  const double tail =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
  return result + std::log(x) - 0.5 / x - tail;
}

double log_beta(std::span<const double> alpha) {
  if (alpha.size() < 2) {
    throw std::domain_error("log_beta: need at least 2 components, got " +
                            std::to_string(alpha.size()));
  }
  double sum_log = 0.0;
  double total = 0.0;
  for (double a : alpha) {
    require_positive(a, "log_beta");
    sum_log += log_gamma(a);
    total += a;
  }
  return sum_log - log_gamma(total);
}

}  // namespace crossview
