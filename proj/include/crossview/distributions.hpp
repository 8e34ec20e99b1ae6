#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crossview/random.hpp"

namespace crossview {

/// Categorical distribution: non-negative entries summing to one.
struct SimplexVector {
  std::vector<double> p;
  friend bool operator==(const SimplexVector&, const SimplexVector&) = default;
};

/// Dirichlet concentration vector, all entries finite and > 0.
struct DirichletParams {
  std::vector<double> alpha;
  friend bool operator==(const DirichletParams&, const DirichletParams&) = default;
};

/// Per-class Poisson rates, all entries finite and > 0.
struct PoissonParams {
  std::vector<double> lambda;
  friend bool operator==(const PoissonParams&, const PoissonParams&) = default;
};

/// Object occurrences per class.
struct CountVector {
  std::vector<std::int64_t> k;
  friend bool operator==(const CountVector&, const CountVector&) = default;
};

inline constexpr double kDefaultSimplexEps = 1e-6;
inline constexpr double kSimplexSumTolerance = 1e-9;

// Invariant checks; each throws std::domain_error describing the violation.
void validate(const SimplexVector& x, double tolerance = kSimplexSumTolerance);
void validate(const DirichletParams& params);
void validate(const PoissonParams& params);
void validate(const CountVector& counts);

/// (p_i + eps) / sum_j (p_j + eps). Rejects negative entries and the all-zero vector.
SimplexVector smooth_simplex(std::span<const double> p, double eps = kDefaultSimplexEps);

/// -ln B(alpha) + sum_i (alpha_i - 1) ln x_i. Every x_i must be > 0.
double dirichlet_log_pdf(const DirichletParams& params, const SimplexVector& x);

/// Gradient of -dirichlet_log_pdf with respect to alpha:
/// psi(alpha_i) - psi(sum_j alpha_j) - ln x_i.
std::vector<double> dirichlet_nll_grad(const DirichletParams& params, const SimplexVector& x);

/// Sum over classes of -lambda_i + k_i ln lambda_i - ln k_i!.
/// Classes are treated as independent.
double poisson_log_pmf(const PoissonParams& params, const CountVector& counts);

/// Gradient of -poisson_log_pmf with respect to lambda: 1 - k_i / lambda_i.
std::vector<double> poisson_nll_grad(const PoissonParams& params, const CountVector& counts);

SimplexVector dirichlet_mean(const DirichletParams& params);

/// KL(p || q) = sum_i p_i (ln p_i - ln q_i) with 0 ln 0 = 0. q must be strictly positive.
double kl_divergence(const SimplexVector& p, const SimplexVector& q);

/// Normalized Gamma variates; sums to one up to rounding of the final division.
SimplexVector sample_dirichlet(const DirichletParams& params, Rng& rng);
CountVector sample_poisson(const PoissonParams& params, Rng& rng);

}  // namespace crossview
