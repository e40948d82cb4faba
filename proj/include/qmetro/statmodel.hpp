#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qmetro/fock.hpp"

namespace qmetro {

struct ParamPoint {
  std::vector<std::string> names;
  RVec values;

  ParamPoint() = default;
  ParamPoint(std::vector<std::string> n, RVec v);
};

struct OutcomeSample {
  // Outcome index for discrete models, measured value for Gaussian ones.
  std::vector<double> outcomes;
  std::uint64_t seed = 0;
  ParamPoint true_params;

  long size() const { return static_cast<long>(outcomes.size()); }
  std::vector<long> counts(int n_outcomes) const;
};

// A parametric family of states or outcome distributions.  Four flavors:
//   Unitary     exp(-i sum_h phi_h G_h) |psi0>, exact derivatives
//   DensityMap  arbitrary phi -> rho, finite-difference derivatives
//   Discrete    closed-form outcome probabilities p(x|phi)
//   Gaussian    scalar outcome with mean mu(phi), variance v(phi)
class ParametricModel {
public:
  enum class Kind { Unitary, DensityMap, Discrete, Gaussian };

  static ParametricModel unitary(std::vector<LinearOperator> generators, StateVector psi0,
                                 std::vector<std::string> names);
  static ParametricModel density_map(FockBasis basis, std::vector<std::string> names,
                                     std::function<DensityOperator(const RVec&)> map,
                                     std::function<CMat(const RVec&, int)> analytic_derivative = {},
                                     double fd_step_scale = 1e-5);
  static ParametricModel discrete(int n_outcomes, std::vector<std::string> names,
                                  std::function<RVec(const RVec&)> probs,
                                  std::function<RMat(const RVec&)> dprobs = {},
                                  double fd_step_scale = 1e-5);
  static ParametricModel gaussian(std::function<double(double)> mean, std::function<double(double)> var,
                                  std::string name = "phi",
                                  std::function<double(double)> dmean = {});

  Kind kind() const { return kind_; }
  int n_params() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& param_names() const { return names_; }
  int n_outcomes() const { return n_outcomes_; }
  const FockBasis* basis() const { return basis_ ? &*basis_ : nullptr; }

  // State-model interface (Unitary / DensityMap).
  DensityOperator state_at(const RVec& phi) const;
  // Hermitian, traceless derivative of the state along parameter h.
  CMat state_derivative(const RVec& phi, int h) const;
  std::vector<CMat> state_derivatives(const RVec& phi) const;

  // Outcome distributions.  The Povm overloads serve the state models.
  RVec probabilities(const RVec& phi) const;
  RVec probabilities(const RVec& phi, const Povm& povm) const;
  // d p(x) / d phi_h as an (outcomes x params) matrix.
  RMat probability_jacobian(const RVec& phi) const;
  RMat probability_jacobian(const RVec& phi, const Povm& povm) const;

  double gaussian_mean(double phi) const;
  double gaussian_variance(double phi) const;
  double gaussian_mean_derivative(double phi) const;

private:
  ParametricModel() = default;
  void check_params(const RVec& phi) const;

  Kind kind_ = Kind::Discrete;
  std::vector<std::string> names_;
  int n_outcomes_ = 0;
  std::optional<FockBasis> basis_;
  double fd_step_scale_ = 1e-5;

  std::vector<LinearOperator> generators_;
  std::optional<StateVector> psi0_;
  std::function<DensityOperator(const RVec&)> map_;
  std::function<CMat(const RVec&, int)> map_derivative_;
  std::function<RVec(const RVec&)> probs_;
  std::function<RMat(const RVec&)> dprobs_;
  std::function<double(double)> mean_, var_, dmean_;
};

// i.i.d. draws with a counter-based stream: element i of the sample depends
// only on (seed, i), so any split across threads yields the same sample.
OutcomeSample sample_distribution(const RVec& probs, long m, std::uint64_t seed);
OutcomeSample sample(const ParametricModel& model, const RVec& phi, long m, std::uint64_t seed);
OutcomeSample sample(const ParametricModel& model, const Povm& povm, const RVec& phi, long m,
                     std::uint64_t seed);

// Variance estimate v(phi)/(d mu/d phi)^2 from a Gaussian model; returns
// +infinity when the mean is stationary at phi.
double error_propagation_variance(const ParametricModel& model, double phi);

}  // namespace qmetro
