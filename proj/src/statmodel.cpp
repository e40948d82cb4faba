#include "qmetro/statmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qmetro/parallel.hpp"
#include "qmetro/rng.hpp"

namespace qmetro {

ParamPoint::ParamPoint(std::vector<std::string> n, RVec v) : names(std::move(n)), values(std::move(v)) {
  if (static_cast<Eigen::Index>(names.size()) != values.size())
    throw Error("ParamPoint: names and values differ in length");
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j]) throw Error("ParamPoint: duplicate parameter name " + names[i]);
}

std::vector<long> OutcomeSample::counts(int n_outcomes) const {
  std::vector<long> c(n_outcomes, 0);
  for (double x : outcomes) {
    const long k = std::lround(x);
    if (k < 0 || k >= n_outcomes) throw Error("OutcomeSample::counts: outcome out of range");
    ++c[k];
  }
  return c;
}

namespace {

// Pairwise generator commutators must vanish on the cutoff-interior block up
// to a c-number; that covers commuting phase families and quadrature pairs
// whose commutator is i times the identity there.
void check_generator_commutators(const std::vector<LinearOperator>& gens) {
  if (gens.size() < 2) return;
  const FockBasis& basis = gens[0].basis;
  std::vector<Eigen::Index> interior;
  for (Eigen::Index i = 0; i < basis.dim(); ++i)
    if (basis.interior(i)) interior.push_back(i);
  if (interior.empty()) return;
  for (std::size_t a = 0; a < gens.size(); ++a)
    for (std::size_t b = a + 1; b < gens.size(); ++b) {
      const CMat c = commutator(gens[a].mat, gens[b].mat);
      cxd mean = 0.0;
      for (auto i : interior) mean += c(i, i);
      mean /= static_cast<double>(interior.size());
      double dev = 0.0;
      for (auto i : interior)
        for (auto j : interior) dev = std::max(dev, std::abs(c(i, j) - (i == j ? mean : cxd(0.0))));
      if (dev > 1e-9)
        throw Error("ParametricModel::unitary: generators " + std::to_string(a) + " and " +
                    std::to_string(b) + " do not commute (commutator deviates from a c-number by " +
                    std::to_string(dev) + ")");
    }
}

}  // namespace

ParametricModel ParametricModel::unitary(std::vector<LinearOperator> generators, StateVector psi0,
                                         std::vector<std::string> names) {
  if (generators.empty()) throw Error("ParametricModel::unitary: no generators");
  if (generators.size() != names.size())
    throw Error("ParametricModel::unitary: one name per generator required");
  for (const auto& g : generators) {
    if (!(g.basis == psi0.basis)) throw Error("ParametricModel::unitary: basis mismatch");
    if (hermiticity_error(g.mat) > 1e-9) throw Error("ParametricModel::unitary: generator not Hermitian");
  }
  if (std::abs(psi0.norm() - 1.0) > 1e-10) throw Error("ParametricModel::unitary: psi0 not normalized");
  check_generator_commutators(generators);

  ParametricModel m;
  m.kind_ = Kind::Unitary;
  m.names_ = std::move(names);
  m.basis_ = psi0.basis;
  m.generators_ = std::move(generators);
  m.psi0_ = std::move(psi0);
  return m;
}

ParametricModel ParametricModel::density_map(FockBasis basis, std::vector<std::string> names,
                                             std::function<DensityOperator(const RVec&)> map,
                                             std::function<CMat(const RVec&, int)> analytic_derivative,
                                             double fd_step_scale) {
  if (!map) throw Error("ParametricModel::density_map: missing map");
  ParametricModel m;
  m.kind_ = Kind::DensityMap;
  m.names_ = std::move(names);
  m.basis_ = std::move(basis);
  m.map_ = std::move(map);
  m.map_derivative_ = std::move(analytic_derivative);
  m.fd_step_scale_ = fd_step_scale;
  return m;
}

ParametricModel ParametricModel::discrete(int n_outcomes, std::vector<std::string> names,
                                          std::function<RVec(const RVec&)> probs,
                                          std::function<RMat(const RVec&)> dprobs, double fd_step_scale) {
  if (n_outcomes < 1) throw Error("ParametricModel::discrete: need at least one outcome");
  if (!probs) throw Error("ParametricModel::discrete: missing probability map");
  ParametricModel m;
  m.kind_ = Kind::Discrete;
  m.names_ = std::move(names);
  m.n_outcomes_ = n_outcomes;
  m.probs_ = std::move(probs);
  m.dprobs_ = std::move(dprobs);
  m.fd_step_scale_ = fd_step_scale;
  return m;
}

ParametricModel ParametricModel::gaussian(std::function<double(double)> mean,
                                          std::function<double(double)> var, std::string name,
                                          std::function<double(double)> dmean) {
  if (!mean || !var) throw Error("ParametricModel::gaussian: missing mean or variance");
  ParametricModel m;
  m.kind_ = Kind::Gaussian;
  m.names_ = {std::move(name)};
  m.mean_ = std::move(mean);
  m.var_ = std::move(var);
  m.dmean_ = std::move(dmean);
  return m;
}

void ParametricModel::check_params(const RVec& phi) const {
  if (phi.size() != static_cast<Eigen::Index>(names_.size()))
    throw Error("ParametricModel: expected " + std::to_string(names_.size()) + " parameters, got " +
                std::to_string(phi.size()));
}

DensityOperator ParametricModel::state_at(const RVec& phi) const {
  check_params(phi);
  if (kind_ == Kind::Unitary) {
    CMat a = CMat::Zero(basis_->dim(), basis_->dim());
    for (std::size_t h = 0; h < generators_.size(); ++h) a += phi[static_cast<Eigen::Index>(h)] * generators_[h].mat;
    const CMat u = herm_exp(a, cxd(0.0, -1.0));
    const CVec amps = u * psi0_->amps;
    return {*basis_, amps * amps.adjoint()};
  }
  if (kind_ == Kind::DensityMap) {
    DensityOperator rho = map_(phi);
    if (hermiticity_error(rho.mat) > 1e-10) throw Error("ParametricModel: map returned non-Hermitian state");
    if (rho.trace_error() > 1e-10) throw Error("ParametricModel: map returned state with trace != 1");
    return rho;
  }
  throw Error("ParametricModel::state_at: not a state model");
}

CMat ParametricModel::state_derivative(const RVec& phi, int h) const {
  check_params(phi);
  if (h < 0 || h >= n_params()) throw Error("ParametricModel::state_derivative: parameter index out of range");
  if (kind_ == Kind::Unitary) {
    // d rho / d phi_h = -i [G_h, rho]; exact, any c-number part of the
    // generator commutators drops out.
    const DensityOperator rho = state_at(phi);
    return -kImag * commutator(generators_[static_cast<std::size_t>(h)].mat, rho.mat);
  }
  if (kind_ == Kind::DensityMap) {
    if (map_derivative_) {
      CMat d = map_derivative_(phi, h);
      return 0.5 * (d + CMat(d.adjoint()));
    }
    const double step = fd_step_scale_ * std::max(1.0, std::abs(phi[h]));
    if (step < 1e-12) throw Error("ParametricModel::state_derivative: finite-difference step underflow");
    RVec lo = phi, hi = phi;
    hi[h] += step;
    lo[h] -= step;
    const CMat d = (map_(hi).mat - map_(lo).mat) / (2.0 * step);
    return 0.5 * (d + CMat(d.adjoint()));
  }
  throw Error("ParametricModel::state_derivative: not a state model");
}

std::vector<CMat> ParametricModel::state_derivatives(const RVec& phi) const {
  std::vector<CMat> out;
  out.reserve(static_cast<std::size_t>(n_params()));
  for (int h = 0; h < n_params(); ++h) out.push_back(state_derivative(phi, h));
  return out;
}

RVec ParametricModel::probabilities(const RVec& phi) const {
  check_params(phi);
  if (kind_ != Kind::Discrete) throw Error("ParametricModel::probabilities: not a discrete model");
  RVec p = probs_(phi);
  if (p.size() != n_outcomes_) throw Error("ParametricModel: probability vector has wrong length");
  if (p.minCoeff() < -1e-12) throw Error("ParametricModel: negative outcome probability");
  if (std::abs(p.sum() - 1.0) > 1e-9) throw Error("ParametricModel: probabilities do not sum to 1");
  return p.cwiseMax(0.0);
}

RVec ParametricModel::probabilities(const RVec& phi, const Povm& povm) const {
  return outcome_distribution(state_at(phi), povm);
}

RMat ParametricModel::probability_jacobian(const RVec& phi) const {
  check_params(phi);
  if (kind_ != Kind::Discrete) throw Error("ParametricModel::probability_jacobian: not a discrete model");
  if (dprobs_) return dprobs_(phi);
  RMat jac(n_outcomes_, n_params());
  for (int h = 0; h < n_params(); ++h) {
    const double step = fd_step_scale_ * std::max(1.0, std::abs(phi[h]));
    RVec lo = phi, hi = phi;
    hi[h] += step;
    lo[h] -= step;
    jac.col(h) = (probs_(hi) - probs_(lo)) / (2.0 * step);
  }
  return jac;
}

RMat ParametricModel::probability_jacobian(const RVec& phi, const Povm& povm) const {
  const auto drhos = state_derivatives(phi);
  RMat jac(static_cast<Eigen::Index>(povm.effects.size()), n_params());
  for (int h = 0; h < n_params(); ++h)
    for (std::size_t x = 0; x < povm.effects.size(); ++x)
      jac(static_cast<Eigen::Index>(x), h) = std::real((drhos[static_cast<std::size_t>(h)] * povm.effects[x]).trace());
  return jac;
}

double ParametricModel::gaussian_mean(double phi) const {
  if (kind_ != Kind::Gaussian) throw Error("ParametricModel: not a Gaussian model");
  return mean_(phi);
}

double ParametricModel::gaussian_variance(double phi) const {
  if (kind_ != Kind::Gaussian) throw Error("ParametricModel: not a Gaussian model");
  const double v = var_(phi);
  if (v <= 0.0) throw Error("ParametricModel: Gaussian variance must be positive");
  return v;
}

double ParametricModel::gaussian_mean_derivative(double phi) const {
  if (kind_ != Kind::Gaussian) throw Error("ParametricModel: not a Gaussian model");
  if (dmean_) return dmean_(phi);
  const double step = 1e-6 * std::max(1.0, std::abs(phi));
  return (mean_(phi + step) - mean_(phi - step)) / (2.0 * step);
}

OutcomeSample sample_distribution(const RVec& probs, long m, std::uint64_t seed) {
  if (m < 1) throw Error("sample_distribution: sample size must be >= 1");
  const double total = probs.sum();
  if (total < 1e-12) throw Error("sample_distribution: distribution has no probability mass");

  RVec cdf(probs.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += std::max(0.0, probs[i]) / total;
    cdf[i] = acc;
  }
  cdf[probs.size() - 1] = 1.0;

  OutcomeSample s;
  s.outcomes.resize(static_cast<std::size_t>(m));
  s.seed = seed;
  const Rng rng(seed);
  par::for_each_index(m, [&](std::int64_t i) {
    const double u = rng.uniform(static_cast<std::uint64_t>(i));
    Eigen::Index k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    s.outcomes[static_cast<std::size_t>(i)] = static_cast<double>(k);
  });
  return s;
}

OutcomeSample sample(const ParametricModel& model, const RVec& phi, long m, std::uint64_t seed) {
  if (model.kind() == ParametricModel::Kind::Gaussian) {
    if (phi.size() != 1) throw Error("sample: Gaussian model takes one parameter");
    const double mu = model.gaussian_mean(phi[0]);
    const double sd = std::sqrt(model.gaussian_variance(phi[0]));
    OutcomeSample s;
    s.outcomes.resize(static_cast<std::size_t>(m));
    s.seed = seed;
    const Rng rng(seed);
    par::for_each_index(m, [&](std::int64_t i) {
      s.outcomes[static_cast<std::size_t>(i)] = mu + sd * rng.gaussian(static_cast<std::uint64_t>(i));
    });
    s.true_params = {model.param_names(), phi};
    return s;
  }
  OutcomeSample s = sample_distribution(model.probabilities(phi), m, seed);
  s.true_params = {model.param_names(), phi};
  return s;
}

OutcomeSample sample(const ParametricModel& model, const Povm& povm, const RVec& phi, long m,
                     std::uint64_t seed) {
  OutcomeSample s = sample_distribution(model.probabilities(phi, povm), m, seed);
  s.true_params = {model.param_names(), phi};
  return s;
}

double error_propagation_variance(const ParametricModel& model, double phi) {
  const double v = model.gaussian_variance(phi);
  const double slope = model.gaussian_mean_derivative(phi);
  if (slope == 0.0) return std::numeric_limits<double>::infinity();
  return v / (slope * slope);
}

}  // namespace qmetro
