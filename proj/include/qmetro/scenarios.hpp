#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qmetro/estimator.hpp"
#include "qmetro/fisher.hpp"
#include "qmetro/statmodel.hpp"

namespace qmetro {

struct ScenarioEntry {
  std::string name;
  double computed = 0.0;
  std::optional<double> target;
  double tol = 1e-9;
  std::string provenance;
  bool exploratory = false;  // reported without a pass/fail target

  double delta() const { return target ? std::abs(computed - *target) : 0.0; }
  bool ok() const { return exploratory || !target || delta() <= tol; }
};

struct ScenarioReport {
  std::string name;
  ParamPoint inputs;
  std::vector<ScenarioEntry> entries;

  void add(std::string entry, double computed, double target, double tol, std::string provenance);
  void add_exploratory(std::string entry, double computed, std::string provenance);
  const ScenarioEntry* find(const std::string& entry) const;
  double value(const std::string& entry) const;  // throws if missing
  bool pass() const;
};

// --- worked examples ----------------------------------------------------------

// Single-photon interferometer t|1,0> + r e^{i phi}|0,1> with an ideal
// balanced recombiner and photon counting.
ScenarioReport mzi_single_photon(double t, double phi);
// Coherent input: intensity (Poisson) estimator and the quadrature model.
ScenarioReport mzi_coherent(double alpha, double phi, int nmax);
// Coherent + squeezed-vacuum input, detection efficiency eta.
ScenarioReport mzi_squeezed(double alpha, double s, double eta, int nmax);
// N00N probe with equal photon loss on both arms and full-detection
// post-selection; quantum-advantage rule eta v^2 N > 1.
ScenarioReport noon_lossy(int n, double eta, double v);
// Optimal fixed-N probe under loss.
ScenarioReport fixed_n_optimize(int n, double eta, std::uint64_t seed = 12345);
// Joint estimation of (phi, t) with a variable recombiner and the
// alternated two-setting strategy with weight w on the phase setting.
ScenarioReport mzi_two_param(double t, double phi, double t_m, double w);
// Simultaneous estimation of Re/Im of a displacement amplitude.
ScenarioReport displacement_estimation(double alpha_re, double alpha_im, int nmax);

// QFI of sum_k beta_k |k, N-k> evolved through e^{-i phi (n0-n1)/2} and equal
// loss eta on both arms, evaluated sector-by-sector in total photon number.
// Matches the ancilla beam-splitter loss channel; kept closed-form fast for
// the optimizer loop.
double lossy_fixed_n_qfi(int n_total, double eta, const RVec& beta);

struct FixedNOptimum {
  RVec beta;
  double qfi;
  bool converged;
  int iterations;
};
// Multistart projected gradient ascent over nonnegative normalized beta.
FixedNOptimum optimize_fixed_n(int n_total, double eta, std::uint64_t seed, int restarts = 20,
                               int max_iterations = 500);

// --- registry (CLI surface) ---------------------------------------------------

struct ScenarioParam {
  std::string name;
  double default_value;
  std::string doc;
};

struct ScenarioDef {
  std::string name;
  std::string summary;
  std::vector<ScenarioParam> params;
  int default_nmax;
  std::function<ScenarioReport(const std::map<std::string, double>&, int nmax, std::uint64_t seed)> run;
  // Closed-form outcome model for estimation studies, when the scenario has one.
  std::function<ParametricModel(const std::map<std::string, double>&)> make_model;
  std::string study_param;  // name of the estimated parameter in `params`
};

const std::vector<ScenarioDef>& scenario_registry();
const ScenarioDef* find_scenario(const std::string& name);

}  // namespace qmetro
