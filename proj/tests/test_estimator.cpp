#include <cmath>

#include "doctest.h"
#include "qmetro/estimator.hpp"
#include "qmetro/parallel.hpp"
#include "qmetro/rng.hpp"
#include "qmetro/stats.hpp"

using namespace qmetro;

namespace {

constexpr double kPi = 3.14159265358979323846;

ParametricModel mzi_model() {
  return ParametricModel::discrete(
      2, {"phi"},
      [](const RVec& p) {
        RVec out(2);
        const double c = std::cos(0.5 * p[0]);
        out << c * c, 1.0 - c * c;
        return out;
      },
      [](const RVec& p) {
        RMat jac(2, 1);
        jac << -0.5 * std::sin(p[0]), 0.5 * std::sin(p[0]);
        return jac;
      });
}

OutcomeSample sample_with_counts(long m0, long m1) {
  OutcomeSample s;
  for (long i = 0; i < m0; ++i) s.outcomes.push_back(0.0);
  for (long i = 0; i < m1; ++i) s.outcomes.push_back(1.0);
  return s;
}

}  // namespace

TEST_CASE("bayesian estimation") {
  const ParametricModel model = mzi_model();
  const Prior prior{0.0, kPi};

  SUBCASE("empty sample returns the prior: flat, mean at the midpoint") {
    const BayesEstimate be = bayes_estimate(OutcomeSample{}, model, prior);
    CHECK(be.estimate == doctest::Approx(0.5 * kPi).epsilon(1e-12));
    CHECK(be.variance == doctest::Approx(kPi * kPi / 12.0).epsilon(1e-6));
    CHECK_FALSE(be.posterior.edge_warning);  // flat is not edge-concentrated
  }

  SUBCASE("posterior density integrates to one (trapezoidal)") {
    const OutcomeSample s = sample(model, RVec::Constant(1, 0.5 * kPi), 20, 11);
    const BayesEstimate be = bayes_estimate(s, model, prior);
    const double h = be.posterior.phi[1] - be.posterior.phi[0];
    double z = 0.0;
    for (Eigen::Index g = 0; g < be.posterior.phi.size(); ++g) {
      const double w = (g == 0 || g + 1 == be.posterior.phi.size()) ? 0.5 * h : h;
      z += w * std::exp(be.posterior.log_posterior[g]);
    }
    CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(be.estimate - 0.5 * kPi) < 0.5);  // peaked near the truth at M = 20
  }

  SUBCASE("posterior matches the closed-form binomial expression") {
    const long m0 = 13, m1 = 7;
    const OutcomeSample s = sample_with_counts(m0, m1);
    const BayesEstimate be = bayes_estimate(s, model, prior, 256);
    // direct formula p0^m0 p1^m1, normalized on the same grid
    RVec direct(256);
    const double h = kPi / 255.0;
    for (int g = 0; g < 256; ++g) {
      const double phi = h * g;
      const double p0 = std::pow(std::cos(0.5 * phi), 2);
      direct[g] = std::pow(p0, double(m0)) * std::pow(1.0 - p0, double(m1));
    }
    double z = 0.0;
    for (int g = 0; g < 256; ++g) z += ((g == 0 || g == 255) ? 0.5 * h : h) * direct[g];
    for (int g = 1; g < 255; ++g)
      CHECK(std::exp(be.posterior.log_posterior[g]) == doctest::Approx(direct[g] / z).epsilon(1e-10));
  }

  SUBCASE("posterior mass on the support edge raises the flag") {
    const OutcomeSample s = sample_with_counts(40, 0);  // concentrates at phi = 0
    const BayesEstimate be = bayes_estimate(s, model, prior);
    CHECK(be.posterior.edge_warning);
  }
}

TEST_CASE("maximum-likelihood estimation") {
  const ParametricModel model = mzi_model();
  const Prior interval{0.0, kPi};

  SUBCASE("closed-form inversion oracle") {
    for (long m0 : {200L, 500L, 800L}) {
      const long m = 1000;
      const OutcomeSample s = sample_with_counts(m0, m - m0);
      const double expected = 2.0 * std::acos(std::sqrt(double(m0) / m));
      CHECK(mle_estimate(s, model, interval) == doctest::Approx(expected).epsilon(1e-6));
    }
  }

  SUBCASE("all outcomes on the bright port pin the estimate to the edge") {
    const OutcomeSample s = sample_with_counts(50, 0);
    CHECK(mle_estimate(s, model, interval) < 1e-6);
  }

  SUBCASE("large sample lands within 5 sigma of the truth") {
    const long m = 10000;
    const OutcomeSample s = sample(model, RVec::Constant(1, 0.5 * kPi), m, 2);
    CHECK(std::abs(mle_estimate(s, model, interval) - 0.5 * kPi) < 5.0 / std::sqrt(double(m)));
  }

  SUBCASE("flat likelihood is reported") {
    const ParametricModel constant = ParametricModel::discrete(
        2, {"phi"}, [](const RVec&) { return (RVec(2) << 0.5, 0.5).finished(); });
    const OutcomeSample s = sample_with_counts(5, 5);
    CHECK_THROWS_AS(mle_estimate(s, constant, interval), Error);
  }
}

TEST_CASE("bayes and mle agree within three posterior deviations at large M") {
  const ParametricModel model = mzi_model();
  const Prior prior{0.0, kPi};
  for (std::uint64_t seed : {3u, 14u, 15u}) {
    const OutcomeSample s = sample(model, RVec::Constant(1, 0.5 * kPi), 1000, seed);
    const BayesEstimate be = bayes_estimate(s, model, prior);
    const double ml = mle_estimate(s, model, prior);
    CHECK(std::abs(be.estimate - ml) < 3.0 * std::sqrt(be.variance));
  }
}

TEST_CASE("bootstrap variance") {
  const ParametricModel model = mzi_model();
  const Prior prior{0.0, kPi};

  SUBCASE("constant estimator has zero bootstrap variance") {
    const OutcomeSample s = sample(model, RVec::Constant(1, 1.2), 100, 9);
    CHECK(bootstrap_variance(s, [](const OutcomeSample&) { return 1.0; }, 200, 1) == 0.0);
  }

  SUBCASE("matches the fresh-experiment variance within 30 percent") {
    const long m = 1000;
    const double phi_true = 0.5 * kPi;
    const Estimator mle = [&](const OutcomeSample& smp) { return mle_estimate(smp, model, prior); };

    const OutcomeSample s = sample(model, RVec::Constant(1, phi_true), m, 17);
    const double boot = bootstrap_variance(s, mle, 1000, 18);

    // oracle: 200 independent experiments
    std::vector<double> fresh(200);
    const Rng rng(19);
    for (int r = 0; r < 200; ++r)
      fresh[static_cast<std::size_t>(r)] =
          mle(sample(model, RVec::Constant(1, phi_true), m, rng.stream(static_cast<std::uint64_t>(r)).key()));
    const double oracle = stats::sample_variance(fresh);
    CHECK(boot == doctest::Approx(oracle).epsilon(0.30));
    CHECK(boot == doctest::Approx(1.0 / double(m)).epsilon(0.30));  // CRB at F = 1
  }

  SUBCASE("insensitive to a permutation of the sample") {
    const OutcomeSample s = sample(model, RVec::Constant(1, 1.0), 400, 21);
    OutcomeSample reversed = s;
    std::reverse(reversed.outcomes.begin(), reversed.outcomes.end());
    const Estimator bayes = [&](const OutcomeSample& smp) {
      return bayes_estimate(smp, model, prior, 512).estimate;
    };
    const double a = bootstrap_variance(s, bayes, 400, 22);
    const double b = bootstrap_variance(reversed, bayes, 400, 22);
    CHECK(a == doctest::Approx(b).epsilon(0.25));
  }

  CHECK_THROWS_AS(bootstrap_variance(OutcomeSample{}, [](const OutcomeSample&) { return 0.0; }, 50, 1),
                  Error);
}

TEST_CASE("monte-carlo study") {
  const ParametricModel model = mzi_model();
  const Prior prior{0.0, kPi};

  SUBCASE("reaches the working regime for moderate M") {
    const McStudy study = mc_study(model, 0.5 * kPi, {300, 1000}, 60, 5150, prior);
    CHECK(study.fisher_info == doctest::Approx(1.0).epsilon(1e-10));
    for (const auto& row : study.rows) {
      CHECK(row.ratio > 0.6);
      CHECK(row.ratio < 1.5);
      CHECK(row.crb == doctest::Approx(1.0 / double(row.m)).epsilon(1e-12));
    }
  }

  SUBCASE("same seed reproduces the table bitwise") {
    const McStudy a = mc_study(model, 1.2, {50, 200}, 40, 77, prior);
    const McStudy b = mc_study(model, 1.2, {50, 200}, 40, 77, prior);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].empirical_variance == b.rows[i].empirical_variance);
      CHECK(a.rows[i].mean_estimate == b.rows[i].mean_estimate);
    }
  }

  SUBCASE("serial and parallel repetitions agree bitwise") {
    par::set_parallel(false);
    const McStudy serial = mc_study(model, 1.2, {100}, 30, 123, prior);
    par::set_parallel(true);
    const McStudy parallel = mc_study(model, 1.2, {100}, 30, 123, prior);
    CHECK(serial.rows[0].empirical_variance == parallel.rows[0].empirical_variance);
    CHECK(serial.rows[0].mean_estimate == parallel.rows[0].mean_estimate);
  }

  SUBCASE("small samples can fall below the CRB") {
    bool sub_crb_seen = false;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const McStudy study = mc_study(model, 0.5 * kPi, {10}, 80, 9000 + seed, prior);
      if (study.rows[0].ratio < 1.0) sub_crb_seen = true;
    }
    CHECK(sub_crb_seen);
  }

  SUBCASE("a singular working point is flagged, not hidden") {
    const McStudy study = mc_study(model, 1e-7, {100}, 10, 3, prior);
    CHECK(study.fi_divergent);
    CHECK(std::isnan(study.rows[0].crb));
  }
}

TEST_CASE("chi-squared diagnostic") {
  SUBCASE("variance at the bound gives ratio one") {
    const CrbDiagnostic d = crb_diagnostic(1.0 / 500.0, 1.0, 500, 99);
    CHECK(d.ratio == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("p-values are uniform for data exactly at the bound") {
    // oracle: gaussian estimates with variance sigma0^2 = 1/(M F)
    const long m = 1000;
    const int r = 100;
    const double sigma0 = 1.0 / std::sqrt(double(m));
    std::vector<double> pvals;
    const Rng rng(1234);
    for (int s = 0; s < 200; ++s) {
      const Rng stream = rng.stream(static_cast<std::uint64_t>(s));
      std::vector<double> est(static_cast<std::size_t>(r));
      for (int i = 0; i < r; ++i) est[static_cast<std::size_t>(i)] = sigma0 * stream.gaussian(static_cast<std::uint64_t>(i));
      pvals.push_back(crb_diagnostic(stats::sample_variance(est), 1.0, m, r - 1).p_value);
    }
    CHECK(stats::ks_uniform(pvals).p_value > 0.05);
  }

  SUBCASE("doubled noise is detected") {
    const long m = 1000;
    const int r = 100;
    const double sigma = std::sqrt(2.0) / std::sqrt(double(m));
    const Rng rng(77);
    std::vector<double> est(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) est[static_cast<std::size_t>(i)] = sigma * rng.gaussian(static_cast<std::uint64_t>(i));
    CHECK(crb_diagnostic(stats::sample_variance(est), 1.0, m, r - 1).p_value < 0.01);
  }
}

TEST_CASE("posterior variance shrinks as 1/M") {
  const ParametricModel model = mzi_model();
  const Prior prior{0.0, kPi};
  const Rng rng(31337);
  double sum_m = 0.0, sum_4m = 0.0;
  for (int s = 0; s < 50; ++s) {
    const auto seed_a = rng.stream(static_cast<std::uint64_t>(2 * s)).key();
    const auto seed_b = rng.stream(static_cast<std::uint64_t>(2 * s + 1)).key();
    sum_m += bayes_estimate(sample(model, RVec::Constant(1, 0.5 * kPi), 500, seed_a), model, prior).variance;
    sum_4m += bayes_estimate(sample(model, RVec::Constant(1, 0.5 * kPi), 2000, seed_b), model, prior).variance;
  }
  const double ratio = sum_m / sum_4m;
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.5);
}

TEST_CASE("biased Cramer-Rao inequality") {
  const ParametricModel model = mzi_model();
  const Prior prior{0.0, kPi};
  RVec grid(5);
  grid << 0.9, 1.2, 0.5 * kPi, 1.9, 2.2;

  SUBCASE("an unbiased estimator reduces to the standard bound") {
    const Estimator mle = [&](const OutcomeSample& smp) { return mle_estimate(smp, model, prior); };
    const BiasedCrbReport rep = biased_crb_check(mle, model, grid, 250, 150, 4711);
    CHECK(rep.all_hold);
    CHECK_FALSE(rep.zero_information);
    for (const auto& pt : rep.points) CHECK(std::abs(pt.bias) < 0.02);
  }

  SUBCASE("a shrunk estimator admits sub-CRB variance and still satisfies the bound") {
    const Estimator shrunk = [&](const OutcomeSample& smp) {
      return 0.9 * mle_estimate(smp, model, prior);
    };
    const BiasedCrbReport rep = biased_crb_check(shrunk, model, grid, 250, 200, 815);
    CHECK(rep.all_hold);
    bool sub_crb = false;
    for (const auto& pt : rep.points) {
      CHECK(pt.bias_slope == doctest::Approx(-0.1).epsilon(0.5));
      if (pt.emp_variance < 1.0 / (250.0 * 1.0)) sub_crb = true;
    }
    CHECK(sub_crb);
  }

  SUBCASE("a parameter-free model is flagged as carrying no information") {
    const ParametricModel constant = ParametricModel::discrete(
        2, {"phi"}, [](const RVec&) { return (RVec(2) << 0.7, 0.3).finished(); },
        [](const RVec&) { return RMat::Zero(2, 1); });
    const Estimator fixed = [](const OutcomeSample&) { return 1.0; };
    const BiasedCrbReport rep = biased_crb_check(fixed, constant, grid, 50, 60, 1);
    CHECK(rep.zero_information);
  }
}
