#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qmetro/statmodel.hpp"

namespace qmetro {

// Flat prior support (also the MLE search interval).
struct Prior {
  double lo;
  double hi;
};

struct PosteriorGrid {
  RVec phi;            // uniform grid over the prior support
  RVec log_posterior;  // normalized: trapezoidal integral of exp() is 1
  double normalization;  // log of the raw evidence integral
  bool edge_warning;     // posterior mass piled up at a support edge
};

struct BayesEstimate {
  PosteriorGrid posterior;
  double estimate;  // posterior mean
  double variance;  // posterior second central moment
};

inline constexpr int kDefaultGridPoints = 2048;

// Grid Bayesian estimate for a single-parameter discrete model; the
// posterior is accumulated in log space with max subtraction.
BayesEstimate bayes_estimate(const OutcomeSample& sample, const ParametricModel& model, Prior prior,
                             int grid_points = kDefaultGridPoints);

// Maximum-likelihood estimate: grid scan refined by golden section; grid
// ties break toward the smaller parameter value.
double mle_estimate(const OutcomeSample& sample, const ParametricModel& model, Prior interval,
                    int grid_points = kDefaultGridPoints, double tol = 1e-8);

using Estimator = std::function<double(const OutcomeSample&)>;

// Empirical variance of the estimator over B bootstrap resamples drawn with
// replacement; deterministic given the seed.
double bootstrap_variance(const OutcomeSample& sample, const Estimator& estimator, int b,
                          std::uint64_t seed);

enum class EstimatorKind { Bayes, Mle };

struct McRow {
  long m;                    // sample size per experiment
  double mean_estimate;      // across repetitions
  double empirical_variance;
  double crb;                // 1 / (M F)
  double ratio;              // M F sigma^2
  double p_value;            // chi-squared diagnostic
};

struct McStudy {
  std::vector<McRow> rows;
  double fisher_info;
  bool fi_divergent;  // the working point sits on a singular fringe
  int repetitions;
};

// Repeats the estimation experiment R times for each sample size and
// compares the spread of the estimates with the Cramer-Rao prediction.
McStudy mc_study(const ParametricModel& model, double phi_true, const std::vector<long>& m_list, int r,
                 std::uint64_t seed, Prior prior, EstimatorKind kind = EstimatorKind::Bayes,
                 int grid_points = kDefaultGridPoints);

struct CrbDiagnostic {
  double ratio;    // M F sigma^2
  double p_value;  // survival of dof * ratio under chi^2(dof)
};
CrbDiagnostic crb_diagnostic(double var_hat, double fisher, long m, int dof);

struct BiasedCrbPoint {
  double phi;
  double bias;
  double bias_slope;
  double emp_variance;
  double bound;      // (1 + db/dphi)^2 / (M F)
  double tolerance;  // 3 standard errors
  bool holds;
  bool zero_information;
};

struct BiasedCrbReport {
  std::vector<BiasedCrbPoint> points;
  bool all_hold;
  bool zero_information;
};

// Monte-Carlo test of the biased Cramer-Rao inequality on a parameter grid;
// the bias derivative is taken by finite differences between grid points.
BiasedCrbReport biased_crb_check(const Estimator& estimator, const ParametricModel& model,
                                 const RVec& phi_grid, long m, int r, std::uint64_t seed);

}  // namespace qmetro
