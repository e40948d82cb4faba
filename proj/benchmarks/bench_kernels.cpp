// Times the OpenMP kernels against the serial reference path.  Both paths
// are bit-identical by construction; this target reports the speedup.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "qmetro/estimator.hpp"
#include "qmetro/parallel.hpp"
#include "qmetro/scenarios.hpp"

using namespace qmetro;

namespace {

constexpr double kPi = 3.14159265358979323846;

double time_of(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

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

void report(const std::string& name, const std::function<void()>& fn) {
  par::set_parallel(false);
  const double serial = time_of(fn);
  par::set_parallel(true);
  const double parallel = time_of(fn);
  std::printf("%-28s serial %8.3fs   openmp %8.3fs   speedup %.2fx\n", name.c_str(), serial,
              parallel, serial / parallel);
  std::fflush(stdout);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", par::max_threads());
  const ParametricModel model = mzi_model();
  const Prior prior{0.0, kPi};
  const RVec phi = RVec::Constant(1, 0.5 * kPi);

  report("sample 4M draws", [&] {
    const OutcomeSample s = sample(model, phi, 4000000, 1);
    if (s.outcomes.empty()) std::abort();
  });

  report("mc_study R=200 M=2000", [&] {
    const McStudy st = mc_study(model, 0.5 * kPi, {2000}, 200, 2, prior);
    if (st.rows.empty()) std::abort();
  });

  report("bootstrap B=4000 (bayes)", [&] {
    const OutcomeSample s = sample(model, phi, 2000, 3);
    const Estimator bayes = [&](const OutcomeSample& smp) {
      return bayes_estimate(smp, model, prior).estimate;
    };
    (void)bootstrap_variance(s, bayes, 4000, 4);
  });

  report("biased-CRB grid 5x200", [&] {
    RVec grid(5);
    grid << 0.9, 1.2, 0.5 * kPi, 1.9, 2.2;
    const Estimator mle = [&](const OutcomeSample& smp) { return mle_estimate(smp, model, prior); };
    (void)biased_crb_check(mle, model, grid, 400, 200, 5);
  });

  return 0;
}
