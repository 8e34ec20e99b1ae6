#pragma once

#include <span>

namespace crossview {

// Special functions used by the Dirichlet and Poisson likelihoods.
// All of them reject non-finite or non-positive arguments with std::domain_error.

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// psi(x) = d/dx ln Gamma(x) for x > 0.
double digamma(double x);

/// Multivariate log-beta: sum_i ln Gamma(alpha_i) - ln Gamma(sum_i alpha_i).
/// Requires at least two strictly positive components.
double log_beta(std::span<const double> alpha);

}  // namespace crossview
