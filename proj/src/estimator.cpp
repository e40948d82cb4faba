#include "qmetro/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qmetro/fisher.hpp"
#include "qmetro/parallel.hpp"
#include "qmetro/rng.hpp"
#include "qmetro/stats.hpp"

namespace qmetro {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_single_param_discrete(const ParametricModel& model, const char* who) {
  if (model.kind() != ParametricModel::Kind::Discrete)
    throw Error(std::string(who) + ": a closed-form discrete model is required");
  if (model.n_params() != 1) throw Error(std::string(who) + ": single-parameter model required");
}

// Log outcome probabilities tabulated on a uniform grid; shared by every
// repetition of a study, since only the counts change between experiments.
struct GridTable {
  RVec phi;
  RMat logp;  // grid_points x n_outcomes

  GridTable(const ParametricModel& model, Prior prior, int grid_points) {
    if (!(prior.hi > prior.lo)) throw Error("estimator: empty prior support");
    if (grid_points < 8) throw Error("estimator: grid too coarse");
    phi.resize(grid_points);
    logp.resize(grid_points, model.n_outcomes());
    const double h = (prior.hi - prior.lo) / (grid_points - 1);
    for (int g = 0; g < grid_points; ++g) {
      phi[g] = prior.lo + h * g;
      RVec p = model.probabilities(RVec::Constant(1, phi[g]));
      for (Eigen::Index x = 0; x < p.size(); ++x) logp(g, x) = p[x] > 0.0 ? std::log(p[x]) : kNegInf;
    }
  }

  double log_likelihood(int g, const std::vector<long>& counts) const {
    double s = 0.0;
    for (std::size_t x = 0; x < counts.size(); ++x) {
      if (counts[x] == 0) continue;
      const double lp = logp(g, static_cast<Eigen::Index>(x));
      if (lp == kNegInf) return kNegInf;
      s += static_cast<double>(counts[x]) * lp;
    }
    return s;
  }
};

struct Moments {
  double norm_raw;  // raw trapezoidal integral of exp(loglik)
  double mean;
  double variance;
  double edge_over_uniform;  // normalized edge density relative to a flat posterior
};

Moments posterior_moments(const RVec& phi, RVec& loglik) {
  const Eigen::Index n = phi.size();
  const double h = phi[1] - phi[0];
  const double peak = loglik.maxCoeff();
  if (peak == kNegInf) throw Error("bayes_estimate: posterior vanishes on the whole prior support");

  double z = 0.0, m1 = 0.0, m2 = 0.0;
  double edge_density = 0.0;
  for (Eigen::Index g = 0; g < n; ++g) {
    const double w = (g == 0 || g == n - 1) ? 0.5 * h : h;
    const double dens = std::exp(loglik[g] - peak);
    z += w * dens;
    m1 += w * dens * phi[g];
    m2 += w * dens * phi[g] * phi[g];
    if (g == 0 || g == n - 1) edge_density = std::max(edge_density, dens);
  }
  m1 /= z;
  m2 /= z;
  // Renormalize in place: exp(loglik) now integrates to 1.
  const double log_z = std::log(z) + peak;
  for (Eigen::Index g = 0; g < n; ++g) loglik[g] -= log_z;
  const double support = phi[n - 1] - phi[0];
  return {log_z, m1, std::max(0.0, m2 - m1 * m1), edge_density / z * support};
}

BayesEstimate bayes_from_counts(const GridTable& table, const std::vector<long>& counts) {
  const int n = static_cast<int>(table.phi.size());
  RVec lp(n);
  for (int g = 0; g < n; ++g) lp[g] = table.log_likelihood(g, counts);
  Moments mom = posterior_moments(table.phi, lp);
  // A posterior piling up against the support boundary signals a prior
  // chosen too narrow; a flat posterior sits exactly at 1.
  PosteriorGrid grid{table.phi, std::move(lp), mom.norm_raw, mom.edge_over_uniform > 3.0};
  return {std::move(grid), mom.mean, mom.variance};
}

double mle_from_counts(const GridTable& table, const ParametricModel& model,
                       const std::vector<long>& counts, double tol) {
  const int n = static_cast<int>(table.phi.size());
  int best = 0;
  double best_ll = kNegInf;
  double worst_ll = std::numeric_limits<double>::infinity();
  for (int g = 0; g < n; ++g) {
    const double ll = table.log_likelihood(g, counts);
    if (ll > best_ll) {  // strict: ties keep the smaller phi
      best_ll = ll;
      best = g;
    }
    worst_ll = std::min(worst_ll, ll);
  }
  if (best_ll == kNegInf) throw Error("mle_estimate: likelihood vanishes everywhere on the interval");
  if (best_ll - worst_ll < 1e-12)
    throw Error("mle_estimate: flat likelihood (degenerate sample)");

  auto loglik = [&](double phi) {
    const RVec p = model.probabilities(RVec::Constant(1, phi));
    double s = 0.0;
    for (std::size_t x = 0; x < counts.size(); ++x) {
      if (counts[x] == 0) continue;
      const double px = p[static_cast<Eigen::Index>(x)];
      if (px <= 0.0) return kNegInf;
      s += static_cast<double>(counts[x]) * std::log(px);
    }
    return s;
  };

  // Golden-section ascent on the bracket around the best grid point.
  double a = table.phi[std::max(0, best - 1)];
  double b = table.phi[std::min(n - 1, best + 1)];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = loglik(x1), f2 = loglik(x2);
  while (b - a > tol) {
    if (f1 >= f2) {  // keep the left interval on ties: smaller phi wins
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = loglik(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = loglik(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

BayesEstimate bayes_estimate(const OutcomeSample& sample, const ParametricModel& model, Prior prior,
                             int grid_points) {
  check_single_param_discrete(model, "bayes_estimate");
  const GridTable table(model, prior, grid_points);
  return bayes_from_counts(table, sample.counts(model.n_outcomes()));
}

double mle_estimate(const OutcomeSample& sample, const ParametricModel& model, Prior interval,
                    int grid_points, double tol) {
  check_single_param_discrete(model, "mle_estimate");
  const GridTable table(model, interval, grid_points);
  return mle_from_counts(table, model, sample.counts(model.n_outcomes()), tol);
}

double bootstrap_variance(const OutcomeSample& sample, const Estimator& estimator, int b,
                          std::uint64_t seed) {
  if (b < 100) throw Error("bootstrap_variance: need at least 100 resamples");
  const long m = sample.size();
  if (m < 1) throw Error("bootstrap_variance: empty sample");

  std::vector<double> estimates(static_cast<std::size_t>(b));
  const Rng rng = Rng(seed).stream(0xB00757F1);
  par::for_each_index(b, [&](std::int64_t i) {
    const Rng draw = rng.stream(static_cast<std::uint64_t>(i));
    OutcomeSample resampled;
    resampled.seed = draw.key();
    resampled.true_params = sample.true_params;
    resampled.outcomes.resize(static_cast<std::size_t>(m));
    for (long j = 0; j < m; ++j) {
      const auto pick = static_cast<std::size_t>(draw.uniform(static_cast<std::uint64_t>(j)) * m);
      resampled.outcomes[static_cast<std::size_t>(j)] = sample.outcomes[std::min(pick, static_cast<std::size_t>(m - 1))];
    }
    estimates[static_cast<std::size_t>(i)] = estimator(resampled);
  });
  return stats::sample_variance(estimates);
}

CrbDiagnostic crb_diagnostic(double var_hat, double fisher, long m, int dof) {
  if (var_hat < 0.0) throw Error("crb_diagnostic: negative variance");
  if (dof < 1) throw Error("crb_diagnostic: dof must be >= 1");
  const double ratio = static_cast<double>(m) * fisher * var_hat;
  return {ratio, stats::chi2_survival(dof * ratio, dof)};
}

McStudy mc_study(const ParametricModel& model, double phi_true, const std::vector<long>& m_list, int r,
                 std::uint64_t seed, Prior prior, EstimatorKind kind, int grid_points) {
  check_single_param_discrete(model, "mc_study");
  if (r < 2) throw Error("mc_study: need at least 2 repetitions");

  const RVec phi0 = RVec::Constant(1, phi_true);
  const FiValue fi = classical_fi(model.probabilities(phi0), model.probability_jacobian(phi0).col(0));

  const GridTable table(model, prior, grid_points);
  const RVec probs = model.probabilities(phi0);
  const Rng master(seed);

  McStudy study;
  study.fisher_info = fi.value;
  study.fi_divergent = fi.divergent;
  study.repetitions = r;

  for (std::size_t mi = 0; mi < m_list.size(); ++mi) {
    const long m = m_list[mi];
    if (m < 1) throw Error("mc_study: sample sizes must be >= 1");
    const Rng stream = master.stream(mi);

    std::vector<double> estimates(static_cast<std::size_t>(r));
    par::for_each_index(r, [&](std::int64_t rep) {
      const OutcomeSample s = sample_distribution(probs, m, stream.stream(static_cast<std::uint64_t>(rep)).key());
      const auto counts = s.counts(model.n_outcomes());
      estimates[static_cast<std::size_t>(rep)] = (kind == EstimatorKind::Bayes)
                                                     ? bayes_from_counts(table, counts).estimate
                                                     : mle_from_counts(table, model, counts, 1e-8);
    });

    McRow row;
    row.m = m;
    row.mean_estimate = stats::mean(estimates);
    row.empirical_variance = stats::sample_variance(estimates);
    if (fi.divergent || fi.value <= 0.0) {
      row.crb = std::numeric_limits<double>::quiet_NaN();
      row.ratio = std::numeric_limits<double>::quiet_NaN();
      row.p_value = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.crb = 1.0 / (static_cast<double>(m) * fi.value);
      const CrbDiagnostic diag = crb_diagnostic(row.empirical_variance, fi.value, m, r - 1);
      row.ratio = diag.ratio;
      row.p_value = diag.p_value;
    }
    study.rows.push_back(row);
  }
  return study;
}

BiasedCrbReport biased_crb_check(const Estimator& estimator, const ParametricModel& model,
                                 const RVec& phi_grid, long m, int r, std::uint64_t seed) {
  check_single_param_discrete(model, "biased_crb_check");
  const int n = static_cast<int>(phi_grid.size());
  if (n < 2) throw Error("biased_crb_check: need at least two grid points");
  if (r < 2) throw Error("biased_crb_check: need at least 2 repetitions");

  std::vector<double> bias(n), var(n), fisher(n), se_bias(n);
  std::vector<bool> zero_info(n);
  const Rng master(seed);

  for (int g = 0; g < n; ++g) {
    const RVec phi = RVec::Constant(1, phi_grid[g]);
    const FiValue fi = classical_fi(model.probabilities(phi), model.probability_jacobian(phi).col(0));
    fisher[g] = fi.value;
    zero_info[g] = !fi.divergent && fi.value < 1e-300;

    const RVec probs = model.probabilities(phi);
    const Rng stream = master.stream(static_cast<std::uint64_t>(g));
    std::vector<double> estimates(static_cast<std::size_t>(r));
    par::for_each_index(r, [&](std::int64_t rep) {
      OutcomeSample s = sample_distribution(probs, m, stream.stream(static_cast<std::uint64_t>(rep)).key());
      s.true_params = {model.param_names(), phi};
      estimates[static_cast<std::size_t>(rep)] = estimator(s);
    });
    bias[g] = stats::mean(estimates) - phi_grid[g];
    var[g] = stats::sample_variance(estimates);
    se_bias[g] = std::sqrt(var[g] / r);
  }

  BiasedCrbReport report;
  report.all_hold = true;
  report.zero_information = false;
  for (int g = 0; g < n; ++g) {
    const int lo = std::max(0, g - 1), hi = std::min(n - 1, g + 1);
    const double dphi = phi_grid[hi] - phi_grid[lo];
    const double slope = (bias[hi] - bias[lo]) / dphi;
    const double se_slope = std::hypot(se_bias[hi], se_bias[lo]) / dphi;

    BiasedCrbPoint pt;
    pt.phi = phi_grid[g];
    pt.bias = bias[g];
    pt.bias_slope = slope;
    pt.emp_variance = var[g];
    pt.zero_information = zero_info[g];
    if (zero_info[g]) {
      pt.bound = std::numeric_limits<double>::infinity();
      pt.tolerance = 0.0;
      pt.holds = true;  // vacuous; flagged instead
      report.zero_information = true;
    } else {
      const double mf = static_cast<double>(m) * fisher[g];
      pt.bound = (1.0 + slope) * (1.0 + slope) / mf;
      const double se_var = var[g] * std::sqrt(2.0 / (r - 1));
      const double se_bound = 2.0 * std::abs(1.0 + slope) * se_slope / mf;
      pt.tolerance = 3.0 * std::hypot(se_var, se_bound);
      pt.holds = var[g] >= pt.bound - pt.tolerance;
    }
    report.all_hold = report.all_hold && pt.holds;
    report.points.push_back(pt);
  }
  return report;
}

}  // namespace qmetro
