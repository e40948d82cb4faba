#pragma once

#include <cstddef>
#include <span>

namespace qmetro::stats {

double mean(std::span<const double> xs);
// Unbiased sample variance (divides by n-1).
double sample_variance(std::span<const double> xs);

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-squared distribution with dof degrees of
// freedom, i.e. P(X > x).
double chi2_survival(double x, double dof);

// Kolmogorov-Smirnov test of xs against the uniform distribution on [0,1].
// Returns the asymptotic p-value for the two-sided statistic.
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_uniform(std::span<const double> xs);

}  // namespace qmetro::stats
