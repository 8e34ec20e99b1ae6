#include "crossview/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "crossview/specfn.hpp"

namespace crossview {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

void require_interior(const SimplexVector& x, const char* what) {
  for (std::size_t i = 0; i < x.p.size(); ++i) {
    if (!(x.p[i] > 0.0)) {
      throw std::domain_error(std::string(what) + ": component " + std::to_string(i) +
                              " is zero; pass the observation through smooth_simplex first");
    }
  }
}

}  // namespace

void validate(const SimplexVector& x, double tolerance) {
  if (x.p.size() < 2) throw std::domain_error("simplex vector needs at least 2 components");
  double sum = 0.0;
  for (double v : x.p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::domain_error("simplex vector has a negative or non-finite component");
    }
    sum += v;
  }
  if (std::fabs(sum - 1.0) > tolerance) {
    throw std::domain_error("simplex vector is not normalized: components sum to " +
                            std::to_string(sum));
  }
}

void validate(const DirichletParams& params) {
  for (double a : params.alpha) {
    if (!std::isfinite(a) || !(a > 0.0)) {
      throw std::domain_error("Dirichlet concentration must be finite and > 0");
    }
  }
}

void validate(const PoissonParams& params) {
  for (double l : params.lambda) {
    if (!std::isfinite(l) || !(l > 0.0)) {
      throw std::domain_error("Poisson rate must be finite and > 0");
    }
  }
}

void validate(const CountVector& counts) {
  for (auto k : counts.k) {
    if (k < 0) throw std::domain_error("counts must be non-negative");
  }
}

SimplexVector smooth_simplex(std::span<const double> p, double eps) {
  if (!(eps > 0.0)) throw std::domain_error("smooth_simplex: eps must be > 0");
  double total = 0.0;
  bool any_positive = false;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::domain_error("smooth_simplex: entries must be finite and non-negative");
    }
    any_positive = any_positive || v > 0.0;
    total += v + eps;
  }
  if (!any_positive) throw std::domain_error("smooth_simplex: all-zero input");
  SimplexVector out;
  out.p.reserve(p.size());
  for (double v : p) out.p.push_back((v + eps) / total);
  return out;
}

double dirichlet_log_pdf(const DirichletParams& params, const SimplexVector& x) {
  require_same_size(params.alpha.size(), x.p.size(), "dirichlet_log_pdf");
  require_interior(x, "dirichlet_log_pdf");
  double value = -log_beta(params.alpha);
  for (std::size_t i = 0; i < x.p.size(); ++i) {
    value += (params.alpha[i] - 1.0) * std::log(x.p[i]);
  }
  return value;
}

std::vector<double> dirichlet_nll_grad(const DirichletParams& params, const SimplexVector& x) {
  require_same_size(params.alpha.size(), x.p.size(), "dirichlet_nll_grad");
  require_interior(x, "dirichlet_nll_grad");
  validate(params);
  double total = 0.0;
  for (double a : params.alpha) total += a;
  const double psi_total = digamma(total);
  std::vector<double> grad(params.alpha.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = digamma(params.alpha[i]) - psi_total - std::log(x.p[i]);
  }
  return grad;
}

double poisson_log_pmf(const PoissonParams& params, const CountVector& counts) {
  require_same_size(params.lambda.size(), counts.k.size(), "poisson_log_pmf");
  validate(params);
  validate(counts);
  double value = 0.0;
  for (std::size_t i = 0; i < counts.k.size(); ++i) {
    const double k = static_cast<double>(counts.k[i]);
    const double lambda = params.lambda[i];
    value += -lambda + k * std::log(lambda) - log_gamma(k + 1.0);
  }
  return value;
}

std::vector<double> poisson_nll_grad(const PoissonParams& params, const CountVector& counts) {
  require_same_size(params.lambda.size(), counts.k.size(), "poisson_nll_grad");
  validate(params);
  validate(counts);
  std::vector<double> grad(counts.k.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = 1.0 - static_cast<double>(counts.k[i]) / params.lambda[i];
  }
  return grad;
}

SimplexVector dirichlet_mean(const DirichletParams& params) {
  validate(params);
  double total = 0.0;
  for (double a : params.alpha) total += a;
  SimplexVector mean;
  mean.p.reserve(params.alpha.size());
  for (double a : params.alpha) mean.p.push_back(a / total);
  return mean;
}

double kl_divergence(const SimplexVector& p, const SimplexVector& q) {
  require_same_size(p.p.size(), q.p.size(), "kl_divergence");
  require_interior(q, "kl_divergence");
  double value = 0.0;
  for (std::size_t i = 0; i < p.p.size(); ++i) {
    if (p.p[i] > 0.0) value += p.p[i] * (std::log(p.p[i]) - std::log(q.p[i]));
  }
  return value;
}

SimplexVector sample_dirichlet(const DirichletParams& params, Rng& rng) {
  validate(params);
  SimplexVector out;
  out.p.reserve(params.alpha.size());
  double total = 0.0;
  for (double a : params.alpha) {
    const double g = rng.gamma(a);
    out.p.push_back(g);
    total += g;
  }
  if (!(total > 0.0)) {
    // Every Gamma draw underflowed (tiny concentrations): fall back to a vertex.
    std::fill(out.p.begin(), out.p.end(), 0.0);
    out.p[rng.below(out.p.size())] = 1.0;
    return out;
  }
  for (double& v : out.p) v /= total;
  return out;
}

CountVector sample_poisson(const PoissonParams& params, Rng& rng) {
  validate(params);
  CountVector out;
  out.k.reserve(params.lambda.size());
  for (double l : params.lambda) out.k.push_back(static_cast<std::int64_t>(rng.poisson(l)));
  return out;
}

}  // namespace crossview
