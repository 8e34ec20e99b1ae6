#include <cmath>
#include <numbers>
#include <vector>

#include "crossview/distributions.hpp"
#include "crossview/specfn.hpp"
#include "doctest.h"
#include "support/quadrature.hpp"
#include "support/test_support.hpp"

using namespace crossview;
using crossview::testing::integrate_simplex;
using crossview::testing::relative_error;
using crossview::testing::Uniform;

namespace {

SimplexVector random_simplex(Uniform& u, std::size_t k) {
  SimplexVector x;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    x.p.push_back(u(0.05, 1.0));
    total += x.p.back();
  }
  for (double& v : x.p) v /= total;
  return x;
}

}  // namespace

TEST_CASE("smooth_simplex examples") {
  const std::vector<double> vertex{1.0, 0.0};
  const SimplexVector a = smooth_simplex(vertex, 1e-6);
  CHECK(a.p[0] == doctest::Approx(0.9999990).epsilon(1e-9));
  CHECK(a.p[1] == doctest::Approx(1e-6 / (1.0 + 2e-6)).epsilon(1e-12));
  CHECK(std::fabs(a.p[0] + a.p[1] - 1.0) <= 1e-12);

  const std::vector<double> half{0.5, 0.5};
  const SimplexVector b = smooth_simplex(half, 1e-6);
  CHECK(b.p[0] == 0.5);
  CHECK(b.p[1] == 0.5);

  const std::vector<double> unnormalized{2.0, 2.0, 0.0};
  const SimplexVector c = smooth_simplex(unnormalized, 0.5);
  CHECK(c.p[0] == doctest::Approx(2.5 / 5.5).epsilon(1e-15));
  CHECK(c.p[1] == doctest::Approx(2.5 / 5.5).epsilon(1e-15));
  CHECK(c.p[2] == doctest::Approx(0.5 / 5.5).epsilon(1e-15));
}

TEST_CASE("smooth_simplex output invariants") {
  Uniform u(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = static_cast<std::size_t>(u.integer(2, 30));
    const double eps = std::pow(10.0, u(-9.0, -1.0));
    std::vector<double> p(k, 0.0);
    for (double& v : p) v = u(0.0, 1.0) < 0.3 ? 0.0 : u(0.0, 1.0);
    p[0] = 1.0;
    double total = 0.0;
    for (double v : p) total += v;
    for (double& v : p) v /= total;
    const SimplexVector s = smooth_simplex(p, eps);
    double sum = 0.0;
    for (double v : s.p) {
      sum += v;
      CHECK(v >= eps / (1.0 + static_cast<double>(k) * eps) * (1.0 - 1e-12));
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("smooth_simplex rejects bad input") {
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(smooth_simplex(zeros, 1e-6), std::domain_error);
  const std::vector<double> negative{0.5, -0.1};
  CHECK_THROWS_AS(smooth_simplex(negative, 1e-6), std::domain_error);
  const std::vector<double> ok{0.5, 0.5};
  CHECK_THROWS_AS(smooth_simplex(ok, 0.0), std::domain_error);
}

TEST_CASE("dirichlet_log_pdf examples") {
  CHECK(dirichlet_log_pdf({{1.0, 1.0}}, {{0.3, 0.7}}) == doctest::Approx(0.0));
  CHECK(dirichlet_log_pdf({{2.0, 2.0}}, {{0.5, 0.5}}) ==
        doctest::Approx(std::log(1.5)).epsilon(1e-12));
  const double closed = std::log(3360.0) + std::log(0.2) + 2.0 * std::log(0.3) + 3.0 * std::log(0.5);
  const double got = dirichlet_log_pdf({{2.0, 3.0, 4.0}}, {{0.2, 0.3, 0.5}});
  CHECK(got == doctest::Approx(closed).epsilon(1e-12));
  CHECK(got == doctest::Approx(2.0228712).epsilon(1e-7));
}

TEST_CASE("dirichlet_log_pdf errors") {
  CHECK_THROWS_AS(dirichlet_log_pdf({{1.0, 1.0, 1.0}}, {{0.5, 0.5}}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(dirichlet_log_pdf({{2.0, 2.0}}, {{1.0, 0.0}}),
                       doctest::Contains("smooth_simplex"), std::domain_error);
  CHECK_THROWS_AS(dirichlet_log_pdf({{0.0, 2.0}}, {{0.5, 0.5}}), std::domain_error);
}

TEST_CASE("dirichlet_nll_grad closed form and symmetry") {
  const auto g = dirichlet_nll_grad({{1.0, 1.0}}, {{0.5, 0.5}});
  CHECK(g[0] == doctest::Approx(-1.0 + std::log(2.0)).epsilon(1e-10));
  CHECK(g[1] == doctest::Approx(-0.3068528).epsilon(1e-6));
  const auto sym = dirichlet_nll_grad({{3.5, 3.5, 3.5, 3.5}}, {{0.25, 0.25, 0.25, 0.25}});
  for (double v : sym) CHECK(v == sym[0]);
}

TEST_CASE("dirichlet_nll_grad matches finite differences") {
  Uniform u(22);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = trial < 50 ? 2 : static_cast<std::size_t>(u.integer(3, 8));
    DirichletParams alpha;
    for (std::size_t i = 0; i < k; ++i) alpha.alpha.push_back(u(0.1, 5.0));
    const SimplexVector x = random_simplex(u, k);
    const auto grad = dirichlet_nll_grad(alpha, x);
    for (std::size_t i = 0; i < k; ++i) {
      DirichletParams up = alpha, down = alpha;
      up.alpha[i] += h;
      down.alpha[i] -= h;
      const double fd = (-dirichlet_log_pdf(up, x) + dirichlet_log_pdf(down, x)) / (2.0 * h);
      worst = std::max(worst, relative_error(grad[i], fd, 1e-3));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("poisson_log_pmf examples") {
  CHECK(poisson_log_pmf({{1.0}}, {{0}}) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(poisson_log_pmf({{2.0}}, {{2}}) == doctest::Approx(std::log(2.0) - 2.0).epsilon(1e-12));
  CHECK(poisson_log_pmf({{1.0, 2.0}}, {{0, 2}}) == doctest::Approx(-2.3068528).epsilon(1e-7));
  CHECK_THROWS_AS(poisson_log_pmf({{1.0, 2.0}}, {{0}}), std::invalid_argument);
  CHECK_THROWS_AS(poisson_log_pmf({{1.0}}, {{-1}}), std::domain_error);
}

TEST_CASE("poisson_nll_grad examples and finite differences") {
  CHECK(poisson_nll_grad({{3.0}}, {{3}})[0] == doctest::Approx(0.0));
  CHECK(poisson_nll_grad({{2.0}}, {{0}})[0] == doctest::Approx(1.0));
  Uniform u(23);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PoissonParams lambda;
    CountVector k;
    for (int i = 0; i < 5; ++i) {
      lambda.lambda.push_back(u(0.1, 10.0));
      k.k.push_back(u.integer(0, 20));
    }
    const auto grad = poisson_nll_grad(lambda, k);
    for (std::size_t i = 0; i < 5; ++i) {
      PoissonParams up = lambda, down = lambda;
      up.lambda[i] += h;
      down.lambda[i] -= h;
      const double fd = (-poisson_log_pmf(up, k) + poisson_log_pmf(down, k)) / (2.0 * h);
      worst = std::max(worst, relative_error(grad[i], fd, 1e-3));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("dirichlet_mean") {
  const auto uniform = dirichlet_mean({{4.0, 4.0, 4.0, 4.0}});
  for (double v : uniform.p) CHECK(v == 0.25);
  const auto a = dirichlet_mean({{1.0, 3.0}});
  CHECK(a.p[0] == doctest::Approx(0.25));
  CHECK(a.p[1] == doctest::Approx(0.75));
  const auto b = dirichlet_mean({{2.0, 3.0, 5.0}});
  CHECK(b.p[0] == doctest::Approx(0.2));
  CHECK(b.p[1] == doctest::Approx(0.3));
  CHECK(b.p[2] == doctest::Approx(0.5));
  CHECK_NOTHROW(validate(b));
}

TEST_CASE("Dirichlet density integrates to one on the 2-simplex") {
  Uniform u(24);
  for (int trial = 0; trial < 5; ++trial) {
    const DirichletParams alpha{{u(0.5, 5.0), u(0.5, 5.0), u(0.5, 5.0)}};
    CHECK(std::fabs(integrate_simplex(alpha) - 1.0) <= 1e-3);
  }
  // Edge of the supported range: singular density on every face.
  CHECK(std::fabs(integrate_simplex({{0.5, 0.5, 0.5}}) - 1.0) <= 1e-3);
}

TEST_CASE("Poisson pmf sums to one") {
  Uniform u(25);
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = u(0.1, 20.0);
    const int upper = static_cast<int>(std::ceil(lambda + 20.0 * std::sqrt(lambda) + 50.0));
    double total = 0.0;
    for (int k = 0; k <= upper; ++k) total += std::exp(poisson_log_pmf({{lambda}}, {{k}}));
    CHECK(std::fabs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("kl_divergence") {
  CHECK(kl_divergence({{0.3, 0.7}}, {{0.3, 0.7}}) == 0.0);
  CHECK(kl_divergence({{1.0, 0.0}}, {{0.5, 0.5}}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  Uniform u(26);
  for (int trial = 0; trial < 200; ++trial) {
    CHECK(kl_divergence(random_simplex(u, 3), random_simplex(u, 3)) >= 0.0);
  }
  CHECK_THROWS_AS(kl_divergence({{0.5, 0.5}}, {{1.0, 0.0}}), std::domain_error);
  CHECK_THROWS_AS(kl_divergence({{0.5, 0.5}}, {{0.2, 0.3, 0.5}}), std::invalid_argument);
}

TEST_CASE("sample_dirichlet moments, normalization and determinism") {
  Rng rng(31);
  double m0 = 0.0, m1 = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const SimplexVector x = sample_dirichlet({{5.0, 5.0}}, rng);
    CHECK(std::fabs(x.p[0] + x.p[1] - 1.0) <= 1e-12);
    m0 += x.p[0];
    m1 += x.p[1];
  }
  CHECK(std::fabs(m0 / draws - 0.5) <= 0.02);
  CHECK(std::fabs(m1 / draws - 0.5) <= 0.02);

  // Small and mixed concentrations exercise the shape < 1 path.
  const DirichletParams mixed{{0.3, 2.0, 7.7}};
  const SimplexVector mean = dirichlet_mean(mixed);
  std::vector<double> acc(3, 0.0);
  for (int i = 0; i < 20000; ++i) {
    const SimplexVector x = sample_dirichlet(mixed, rng);
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      acc[j] += x.p[j];
      sum += x.p[j];
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::fabs(acc[j] / 20000.0 - mean.p[j]) <= 0.01);

  Rng a(99), b(99);
  for (int i = 0; i < 50; ++i) CHECK(sample_dirichlet(mixed, a) == sample_dirichlet(mixed, b));
}

TEST_CASE("sample_poisson moments and determinism") {
  Rng rng(32);
  for (double lambda : {4.0, 0.3, 29.0, 30.0, 55.0, 400.0}) {
    const int draws = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double k = static_cast<double>(sample_poisson({{lambda}}, rng).k[0]);
      sum += k;
      sum_sq += k * k;
    }
    const double mean = sum / draws;
    const double var = sum_sq / draws - mean * mean;
    // Five standard errors of the sample mean; variance within 10%.
    CHECK_MESSAGE(std::fabs(mean - lambda) <= 5.0 * std::sqrt(lambda / draws), "lambda = " << lambda);
    CHECK_MESSAGE(std::fabs(var / lambda - 1.0) <= 0.1, "lambda = " << lambda);
    if (lambda == 4.0) CHECK(std::fabs(mean - 4.0) <= 0.1);
  }
  Rng a(5), b(5);
  const PoissonParams rates{{0.5, 3.0, 45.0}};
  for (int i = 0; i < 50; ++i) CHECK(sample_poisson(rates, a) == sample_poisson(rates, b));
}

TEST_CASE("sample_poisson matches the pmf in the large-rate branch") {
  // Chi-square style check of the transformed-rejection sampler.
  Rng rng(33);
  const double lambda = 60.0;
  const int draws = 200000;
  std::vector<int> hist(200, 0);
  for (int i = 0; i < draws; ++i) {
    const auto k = sample_poisson({{lambda}}, rng).k[0];
    if (k < 200) ++hist[static_cast<std::size_t>(k)];
  }
  for (int k = 45; k <= 75; ++k) {
    const double expected = draws * std::exp(poisson_log_pmf({{lambda}}, {{k}}));
    CHECK_MESSAGE(std::fabs(hist[static_cast<std::size_t>(k)] - expected) <= 5.0 * std::sqrt(expected),
                  "k = " << k);
  }
}
