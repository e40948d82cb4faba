#include "qmetro/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qmetro/rng.hpp"

namespace qmetro {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// Effects of "apply u, then measure povm", pulled back onto the input state.
Povm povm_after(const LinearOperator& u, const Povm& povm) {
  Povm out{povm.basis, {}, povm.labels};
  out.effects.reserve(povm.effects.size());
  for (const auto& e : povm.effects) out.effects.push_back(u.mat.adjoint() * e * u.mat);
  return out;
}

// Phase generator (n_0 - n_1)/2 of the symmetric two-arm interferometer.
LinearOperator mzi_generator(const FockBasis& basis) {
  const ModeOps m0 = mode_ops(basis, 0);
  const ModeOps m1 = mode_ops(basis, 1);
  return {basis, 0.5 * (m0.number.mat - m1.number.mat)};
}

StateVector one_photon_superposition(const FockBasis& basis, double t, double phase) {
  const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
  CVec amps = CVec::Zero(basis.dim());
  const int occ10[2] = {1, 0};
  const int occ01[2] = {0, 1};
  amps[basis.index_of(occ10)] = t;
  amps[basis.index_of(occ01)] = r * std::exp(kImag * phase);
  return {basis, std::move(amps), 0.0};
}

}  // namespace

void ScenarioReport::add(std::string entry, double computed, double target, double tol,
                         std::string provenance) {
  entries.push_back({std::move(entry), computed, target, tol, std::move(provenance), false});
}

void ScenarioReport::add_exploratory(std::string entry, double computed, std::string provenance) {
  entries.push_back({std::move(entry), computed, std::nullopt, 0.0, std::move(provenance), true});
}

const ScenarioEntry* ScenarioReport::find(const std::string& entry) const {
  for (const auto& e : entries)
    if (e.name == entry) return &e;
  return nullptr;
}

double ScenarioReport::value(const std::string& entry) const {
  const ScenarioEntry* e = find(entry);
  if (!e) throw Error("ScenarioReport: no entry named " + entry);
  return e->computed;
}

bool ScenarioReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const ScenarioEntry& e) { return e.ok(); });
}

// ---------------------------------------------------------------------------
// Single-photon MZI

ScenarioReport mzi_single_photon(double t, double phi) {
  if (t < 0.0 || t > 1.0) throw Error("mzi_single_photon: t outside [0, 1]");
  const double r = std::sqrt(std::max(0.0, 1.0 - t * t));

  ScenarioReport rep;
  rep.name = "mzi-single-photon";
  rep.inputs = {{"t", "phi"}, (RVec(2) << t, phi).finished()};

  const FockBasis basis(2, 1);
  const LinearOperator gen = mzi_generator(basis);
  const ParametricModel model =
      ParametricModel::unitary({gen}, one_photon_superposition(basis, t, 0.0), {"phi"});
  const RVec phiv = RVec::Constant(1, phi);
  const DensityOperator rho = model.state_at(phiv);
  const CMat drho = model.state_derivative(phiv, 0);

  // Ideal balanced recombiner + photon counting.
  const Povm meas = povm_after(beam_splitter(basis, kInvSqrt2, 0, 1), joint_photon_number_povm(basis));
  const FiValue fi = classical_fi(outcome_distribution(rho, meas),
                                  model.probability_jacobian(phiv, meas).col(0));
  const double tr2 = 4.0 * t * t * r * r;
  const double cosphi = std::cos(phi), sinphi = std::sin(phi);
  const double f_closed = tr2 * sinphi * sinphi / (1.0 - tr2 * cosphi * cosphi);
  rep.add("f", fi.value, f_closed, 1e-9, "two-outcome closed form; equals 1 at t = 1/sqrt(2)");

  // Quantum Fisher information through three routes that must agree.
  const double h_target = 4.0 * t * t * (1.0 - t * t);
  const StateVector psi_phi = one_photon_superposition(basis, t, phi);
  const CVec dpsi = -kImag * (gen.mat * psi_phi.amps);
  rep.add("h_sld", qfi(rho, drho), h_target, 1e-9, "4 t^2 (1 - t^2)");
  rep.add("h_pure", qfi_pure(psi_phi.amps, dpsi), h_target, 1e-9, "4 t^2 (1 - t^2)");
  rep.add("h_generator", qfi_generator(psi_phi.amps, gen.mat), h_target, 1e-9, "4 t^2 (1 - t^2)");
  return rep;
}

// ---------------------------------------------------------------------------
// Coherent-light MZI

ScenarioReport mzi_coherent(double alpha, double phi, int nmax) {
  if (alpha <= 0.0) throw Error("mzi_coherent: alpha must be positive");

  ScenarioReport rep;
  rep.name = "mzi-coherent";
  rep.inputs = {{"alpha", "phi"}, (RVec(2) << alpha, phi).finished()};

  // Quadrature readout on the dark port: mean sqrt(2 eta N0) ... with s = 0.
  const ParametricModel quad = ParametricModel::gaussian(
      [alpha](double ph) { return 2.0 * std::sqrt(kN0) * alpha * std::sin(0.5 * ph); },
      [](double) { return kN0; }, "phi",
      [alpha](double ph) { return std::sqrt(kN0) * alpha * std::cos(0.5 * ph); });
  const double sigma_ep = std::sqrt(error_propagation_variance(quad, 0.0));
  rep.add("sigma_error_prop", sigma_ep, 1.0 / alpha, 1e-12, "shot-noise limit 1/alpha");
  rep.add("snl_product", sigma_ep * alpha, 1.0, 1e-12, "sigma * alpha = 1 at the SNL");

  // Direct intensity (Poisson) estimator at the working point phi.
  const ParametricModel intensity = ParametricModel::gaussian(
      [alpha](double ph) { return alpha * alpha * std::pow(std::cos(0.5 * ph), 2); },
      [alpha](double ph) { return std::max(1e-300, alpha * alpha * std::pow(std::cos(0.5 * ph), 2)); },
      "phi", [alpha](double ph) { return -0.5 * alpha * alpha * std::sin(ph); });
  const double s2_int = error_propagation_variance(intensity, phi);
  const double sin_half = std::sin(0.5 * phi);
  if (std::abs(sin_half) > 1e-3)
    rep.add("sigma2_intensity", s2_int, 1.0 / (alpha * alpha * sin_half * sin_half), 1e-12,
            "1 / (alpha^2 sin^2(phi/2))");
  else
    rep.add_exploratory("sigma2_intensity", s2_int, "stationary fringe; no closed-form target");

  // Truncated Fock cross-check of the output intensity.
  if (alpha * alpha + 6.0 * alpha <= static_cast<double>(nmax)) {
    const FockBasis basis(2, nmax);
    const StateVector in = tensor_product(coherent_state(FockBasis(1, nmax), alpha),
                                          vacuum_state(FockBasis(1, nmax)));
    // The symmetric interferometer acts as one beam splitter with t = cos(phi/2).
    const LinearOperator u = beam_splitter(basis, std::abs(std::cos(0.5 * phi)), 0, 1);
    const double intensity_num = expectation(apply(u, in), mode_ops(basis, 0).number);
    rep.add("intensity_numeric", intensity_num, alpha * alpha * std::pow(std::cos(0.5 * phi), 2),
            1e-4 * std::max(1.0, alpha * alpha), "|alpha cos(phi/2)|^2");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Squeezed-light MZI

ScenarioReport mzi_squeezed(double alpha, double s, double eta, int nmax) {
  if (s < 0.0) throw Error("mzi_squeezed: s must be >= 0");
  if (eta < 0.0 || eta > 1.0) throw Error("mzi_squeezed: eta outside [0, 1]");
  if (alpha <= 0.0) throw Error("mzi_squeezed: alpha must be positive");

  ScenarioReport rep;
  rep.name = "mzi-squeezed";
  rep.inputs = {{"alpha", "s", "eta"}, (RVec(3) << alpha, s, eta).finished()};

  const double e2s = std::exp(-2.0 * s);

  // Homodyne readout of the dark-port quadrature around phi = 0.
  auto quad_model = [alpha, e2s](double eff) {
    return ParametricModel::gaussian(
        [alpha, eff](double ph) { return 2.0 * std::sqrt(kN0 * eff) * alpha * std::sin(0.5 * ph); },
        [eff, e2s](double ph) {
          const double c = std::cos(0.5 * ph), n = std::sin(0.5 * ph);
          return kN0 * (eff * (c * c * e2s + n * n) + (1.0 - eff));
        },
        "phi",
        [alpha, eff](double ph) { return std::sqrt(kN0 * eff) * alpha * std::cos(0.5 * ph); });
  };
  rep.add("sigma2_ideal", error_propagation_variance(quad_model(1.0), 0.0), e2s / (alpha * alpha),
          1e-12, "exp(-2s)/alpha^2");
  if (eta > 1e-12)
    rep.add("sigma2_lossy", error_propagation_variance(quad_model(eta), 0.0),
            (e2s + (1.0 - eta) / eta) / (alpha * alpha), 1e-12,
            "(exp(-2s) + (1-eta)/eta)/alpha^2");
  rep.add("f_homodyne_phi0", 1.0 / error_propagation_variance(quad_model(1.0), 0.0),
          alpha * alpha / e2s, 1e-9 * std::max(1.0, alpha * alpha / e2s),
          "information of the quadrature estimator at phi = 0");

  // Both closed-form readings of the interferometer information.  They are
  // not in conflict: the exp(-2s) form belongs to the orientation used in
  // the error-propagation derivation (squeezed along the measured
  // quadrature), the exp(+2s) form to the orthogonal, optimal orientation.
  // The numeric entries below check each against 4 Var of the generator.
  const double nbar = std::sinh(s) * std::sinh(s);
  rep.add_exploratory("f_formula_squeezed_aligned", alpha * alpha * e2s + nbar,
                      "alpha^2 exp(-2s) + sinh^2 s");
  rep.add_exploratory("f_formula_antialigned", alpha * alpha / e2s + nbar,
                      "alpha^2 exp(+2s) + sinh^2 s");

  // Truncated-basis checks of the squeezed vacuum itself.  The tolerance is
  // truncation-limited: 1e-5 for s <= 0.8 at nmax = 30, wider when the
  // discarded tail grows.
  const FockBasis single(1, nmax);
  const StateVector sq = squeezed_vacuum(single, s, 0.0, /*tail_tol=*/1.0);
  if (sq.discarded_tail < 1e-3) {
    const double tol = std::max(1e-5, 100.0 * sq.discarded_tail);
    const LinearOperator x = mode_ops(single, 0).x;
    rep.add("dx2_numeric", variance(sq, x), 0.5 * e2s, tol, "exp(-2s)/2");
    rep.add("nbar_numeric", expectation(sq, mode_ops(single, 0).number), nbar, tol, "sinh^2 s");
    const DensityOperator lossy = loss_channel(DensityOperator::pure(sq), eta, 0);
    rep.add("dx2_lossy_numeric", variance(lossy, x), eta * 0.5 * e2s + 0.5 * (1.0 - eta), tol,
            "eta exp(-2s)/2 + (1-eta)/2");
  }

  // Numeric QFI of the coherent+squeezed probe for both orientations.
  if (alpha * alpha + 6.0 * alpha <= 16 && nmax >= 16 && s <= 0.9) {
    const int cut = 16;
    const FockBasis pairb(2, cut);
    const LinearOperator bs = beam_splitter(pairb, kInvSqrt2, 0, 1);
    const CMat g_eff = bs.mat.adjoint() * mzi_generator(pairb).mat * bs.mat;
    const StateVector coh = coherent_state(FockBasis(1, cut), alpha, 1e-3);
    const StateVector aligned = tensor_product(coh, squeezed_vacuum(FockBasis(1, cut), s, 0.0, 1e-3));
    const StateVector anti = tensor_product(coh, squeezed_vacuum(FockBasis(1, cut), s, kPi, 1e-3));
    const double trunc_tol = std::max(1e-4, 2e3 * (aligned.discarded_tail + anti.discarded_tail));
    rep.add("f_qfi_numeric_aligned", qfi_generator(aligned.amps, g_eff), alpha * alpha * e2s + nbar,
            trunc_tol * (alpha * alpha / e2s + nbar), "4 Var(G) at the aligned orientation");
    rep.add("f_qfi_numeric_antialigned", qfi_generator(anti.amps, g_eff), alpha * alpha / e2s + nbar,
            trunc_tol * (alpha * alpha / e2s + nbar), "4 Var(G) at the optimal orientation");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// N00N states under loss

namespace {

// Projector onto the total-photon-number-N sector of a two-mode basis.
CMat sector_projector(const FockBasis& basis, int n_total) {
  CVec diag = CVec::Zero(basis.dim());
  for (Eigen::Index i = 0; i < basis.dim(); ++i)
    if (basis.occupation(i, 0) + basis.occupation(i, 1) == n_total) diag[i] = 1.0;
  return diag.asDiagonal();
}

CVec noon_coefficients(int n) {
  CVec beta = CVec::Zero(n + 1);
  beta[0] = kInvSqrt2;
  beta[n] = kInvSqrt2;
  return beta;
}

}  // namespace

ScenarioReport noon_lossy(int n, double eta, double v) {
  if (n < 1 || n > 6) throw Error("noon_lossy: N outside [1, 6]");
  if (eta < 0.0 || eta > 1.0) throw Error("noon_lossy: eta outside [0, 1]");
  if (v < 0.0 || v > 1.0) throw Error("noon_lossy: visibility outside [0, 1]");

  ScenarioReport rep;
  rep.name = "noon-lossy";
  rep.inputs = {{"n", "eta", "v"}, (RVec(3) << n, eta, v).finished()};

  const FockBasis basis(2, n);
  const LinearOperator gen = mzi_generator(basis);
  const ParametricModel model =
      ParametricModel::unitary({gen}, fixed_n_state(basis, noon_coefficients(n)), {"phi"});
  const RVec phiv = RVec::Constant(1, 0.3);  // the information is phi-independent
  const DensityOperator rho_phi = model.state_at(phiv);

  rep.add("qfi_lossless", qfi(rho_phi, model.state_derivative(phiv, 0)), double(n) * n, 1e-8, "N^2");

  // Equal loss on both arms; the derivative commutes with the channel.
  DensityOperator rho_l = loss_channel(loss_channel(rho_phi, eta, 0), eta, 1);
  const CMat drho_l = -kImag * commutator(gen.mat, rho_l.mat);
  rep.add_exploratory("qfi_lossy_full", qfi(rho_l, drho_l),
                      "QFI with all surviving-photon sectors retained");

  // Full-detection post-selection: keep the N-photon sector only.
  const CMat p = sector_projector(basis, n);
  const CMat rho_n = p * rho_l.mat * p;
  const double p_det = std::real(rho_n.trace());
  rep.add("p_full_detection", p_det, std::pow(eta, n), 1e-9, "eta^N");
  double fi_ps = 0.0;
  if (p_det > 1e-14) {
    const DensityOperator cond{basis, rho_n / p_det};
    fi_ps = p_det * qfi(cond, CMat(p * drho_l * p) / p_det);
  }
  rep.add("fi_postselected", fi_ps, std::pow(eta, n) * n * n, 1e-6, "eta^N N^2");

  const double margin = eta * v * v * n;
  rep.add("advantage_predicate", margin > 1.0 ? 1.0 : 0.0, margin > 1.0 ? 1.0 : 0.0, 0.5,
          "eta v^2 N > 1");
  rep.add_exploratory("advantage_margin", margin - 1.0, "eta v^2 N - 1");
  return rep;
}

// ---------------------------------------------------------------------------
// Optimal fixed-N probes under loss

double lossy_fixed_n_qfi(int n_total, double eta, const RVec& beta) {
  if (beta.size() != n_total + 1) throw Error("lossy_fixed_n_qfi: need N+1 coefficients");
  if (std::abs(beta.norm() - 1.0) > 1e-9) throw Error("lossy_fixed_n_qfi: coefficients not normalized");
  if (eta < 0.0 || eta > 1.0) throw Error("lossy_fixed_n_qfi: eta outside [0, 1]");

  // One block per surviving total photon number N'; each block is the state
  // conditioned (unnormalized) on losing j probe and l reference photons
  // summed over j + l = N - N'.  Blocks stay (N'+1)-dimensional.
  std::vector<CMat> blocks, dblocks;
  for (int np = 0; np <= n_total; ++np) {
    const int d = np + 1;
    CMat rho = CMat::Zero(d, d), drho = CMat::Zero(d, d);
    for (int j = 0; j <= n_total - np; ++j) {
      const int l = n_total - np - j;
      CVec v(d), dv(d);
      for (int m = 0; m <= np; ++m) {
        const int k = m + j;  // original probe occupation
        const double c = std::sqrt(binom(k, j) * std::pow(eta, m) * std::pow(1.0 - eta, j)) *
                         std::sqrt(binom(n_total - k, l) * std::pow(eta, np - m) * std::pow(1.0 - eta, l));
        v[m] = beta[k] * c;
        dv[m] = -kImag * (k - 0.5 * n_total) * v[m];  // generator (n0 - n1)/2
      }
      rho += v * v.adjoint();
      drho += dv * v.adjoint() + v * dv.adjoint();
    }
    blocks.push_back(std::move(rho));
    dblocks.push_back(std::move(drho));
  }

  double lambda_max = 0.0;
  std::vector<HermEig> eigs;
  for (const auto& b : blocks) {
    eigs.push_back(herm_eig(b));
    lambda_max = std::max(lambda_max, eigs.back().values.maxCoeff());
  }
  const double cut = 1e-10 * std::max(lambda_max, 1e-300);

  double h = 0.0;
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    const CMat dr = eigs[s].vectors.adjoint() * dblocks[s] * eigs[s].vectors;
    for (Eigen::Index i = 0; i < dr.rows(); ++i)
      for (Eigen::Index j = 0; j < dr.cols(); ++j) {
        const double denom = eigs[s].values[i] + eigs[s].values[j];
        if (denom > cut) h += 2.0 * std::norm(dr(i, j)) / denom;
      }
  }
  return h;
}

FixedNOptimum optimize_fixed_n(int n_total, double eta, std::uint64_t seed, int restarts,
                               int max_iterations) {
  if (n_total < 2 || n_total > 6) throw Error("optimize_fixed_n: N outside [2, 6]");
  const int dim = n_total + 1;
  const Rng rng(seed);

  auto project = [](RVec b) {
    b = b.cwiseMax(0.0);
    const double nrm = b.norm();
    if (nrm < 1e-12) {
      b.setZero();
      b[0] = 1.0;
      return b;
    }
    return RVec(b / nrm);
  };
  auto objective = [&](const RVec& b) { return lossy_fixed_n_qfi(n_total, eta, b); };

  FixedNOptimum best{RVec::Zero(dim), -1.0, false, 0};
  for (int restart = 0; restart < restarts; ++restart) {
    RVec beta(dim);
    if (restart == 0) {
      beta.setZero();
      beta[0] = beta[dim - 1] = kInvSqrt2;  // N00N start
    } else if (restart == 1) {
      beta.setConstant(1.0);
    } else {
      const Rng draw = rng.stream(static_cast<std::uint64_t>(restart));
      for (int i = 0; i < dim; ++i)
        beta[i] = std::sqrt(-std::log(1.0 - draw.uniform(static_cast<std::uint64_t>(i))));
    }
    beta = project(beta);

    double f = objective(beta);
    bool converged = false;
    int it = 0;
    const double grad_step = 1e-6;
    for (; it < max_iterations; ++it) {
      RVec grad(dim);
      for (int i = 0; i < dim; ++i) {
        RVec up = beta, dn = beta;
        up[i] += grad_step;
        dn[i] -= grad_step;
        grad[i] = (objective(project(up)) - objective(project(dn))) / (2.0 * grad_step);
      }
      RVec dir = grad - grad.dot(beta) * beta;  // tangent to the sphere
      const double dnorm = dir.norm();
      if (dnorm < 1e-10) {
        converged = true;
        break;
      }
      dir /= dnorm;

      // bracket, then golden-section the step length
      auto value_at = [&](double lr) { return objective(project(beta + lr * dir)); };
      double hi = 0.25;
      double f_hi = value_at(hi);
      while (hi < 64.0) {
        const double f_next = value_at(2.0 * hi);
        if (f_next <= f_hi) break;
        hi *= 2.0;
        f_hi = f_next;
      }
      double a = 0.0, c = 2.0 * hi;
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = c - gr * c, x2 = gr * c;
      double f1 = value_at(x1), f2 = value_at(x2);
      for (int ls = 0; ls < 60 && c - a > 1e-12; ++ls) {
        if (f1 >= f2) {
          c = x2;
          x2 = x1;
          f2 = f1;
          x1 = c - gr * (c - a);
          f1 = value_at(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (c - a);
          f2 = value_at(x2);
        }
      }
      const RVec candidate = project(beta + 0.5 * (a + c) * dir);
      const double f_new = objective(candidate);
      if (f_new <= f + 1e-9) {
        converged = true;
        if (f_new > f) {
          beta = candidate;
          f = f_new;
        }
        break;
      }
      beta = candidate;
      f = f_new;
    }

    // Snap near-zero components to the boundary when it costs nothing.
    RVec snapped = beta;
    for (int i = 0; i < dim; ++i)
      if (std::abs(snapped[i]) < 1e-6) snapped[i] = 0.0;
    snapped = project(snapped);
    if (objective(snapped) >= f - 1e-12) {
      beta = snapped;
      f = objective(snapped);
    }

    if (f > best.qfi) {
      best.beta = beta;
      best.qfi = f;
      best.converged = converged;
      best.iterations = it;
    }
  }

  // Arm-swap symmetry: report the representative with beta[0] >= beta[N].
  if (best.beta[0] < best.beta[dim - 1]) best.beta.reverseInPlace();
  return best;
}

ScenarioReport fixed_n_optimize(int n, double eta, std::uint64_t seed) {
  if (n < 2 || n > 6) throw Error("fixed_n_optimize: N outside [2, 6]");
  if (eta < 0.0 || eta > 1.0) throw Error("fixed_n_optimize: eta outside [0, 1]");

  ScenarioReport rep;
  rep.name = "fixed-n-optimize";
  rep.inputs = {{"n", "eta"}, (RVec(2) << n, eta).finished()};

  const FixedNOptimum opt = optimize_fixed_n(n, eta, seed);
  RVec noon = RVec::Zero(n + 1);
  noon[0] = noon[n] = kInvSqrt2;
  const double qfi_noon = lossy_fixed_n_qfi(n, eta, noon);

  if (eta == 1.0) {
    rep.add("qfi_opt", opt.qfi, double(n) * n, 1e-6, "N^2 at eta = 1");
    rep.add("beta_first", opt.beta[0], kInvSqrt2, 1e-4, "N00N coefficient");
    rep.add("beta_last", opt.beta[n], kInvSqrt2, 1e-4, "N00N coefficient");
    double mid = 0.0;
    for (int k = 1; k < n; ++k) mid = std::max(mid, std::abs(opt.beta[k]));
    rep.add("beta_mid_max", mid, 0.0, 1e-4, "interior coefficients vanish at eta = 1");
  } else {
    rep.add_exploratory("qfi_opt", opt.qfi, "optimized lossy QFI");
    for (int k = 0; k <= n; ++k)
      rep.add_exploratory("beta_" + std::to_string(k), opt.beta[k], "optimal coefficient");
  }
  rep.add_exploratory("qfi_noon", qfi_noon, "lossy QFI of the N00N probe");
  rep.add("qfi_opt_minus_noon_floor", std::min(0.0, opt.qfi - qfi_noon), 0.0, 1e-9,
          "optimum is never below the N00N value");
  rep.add_exploratory("fi_noon_postselected", std::pow(eta, n) * n * n, "eta^N N^2");
  rep.add("converged", opt.converged ? 1.0 : 0.0, 1.0, 0.5, "ascent reached its tolerance");
  return rep;
}

// ---------------------------------------------------------------------------
// Two-parameter MZI

namespace {

ParametricModel two_param_mzi_model(const FockBasis& basis) {
  auto psi = [basis](const RVec& p) {
    return one_photon_superposition(basis, std::clamp(p[1], 0.0, 1.0), p[0]);
  };
  auto map = [psi, basis](const RVec& p) { return DensityOperator::pure(psi(p)); };
  auto dmap = [psi, basis](const RVec& p, int h) -> CMat {
    const double phi = p[0], t = std::clamp(p[1], 0.0, 1.0);
    const double r = std::sqrt(std::max(1e-300, 1.0 - t * t));
    CVec dpsi = CVec::Zero(basis.dim());
    const int occ10[2] = {1, 0};
    const int occ01[2] = {0, 1};
    if (h == 0) {
      dpsi[basis.index_of(occ01)] = kImag * r * std::exp(kImag * phi);
    } else {
      dpsi[basis.index_of(occ10)] = 1.0;
      dpsi[basis.index_of(occ01)] = -(t / r) * std::exp(kImag * phi);
    }
    const CVec ps = psi(p).amps;
    return dpsi * ps.adjoint() + ps * dpsi.adjoint();
  };
  return ParametricModel::density_map(basis, {"phi", "t"}, map, dmap);
}

}  // namespace

ScenarioReport mzi_two_param(double t, double phi, double t_m, double w) {
  if (t <= 0.0 || t >= 1.0) throw Error("mzi_two_param: t must lie strictly inside (0, 1)");
  if (t_m < 0.0 || t_m > 1.0) throw Error("mzi_two_param: t_m outside [0, 1]");
  if (w < 0.0 || w > 1.0) throw Error("mzi_two_param: w outside [0, 1]");

  ScenarioReport rep;
  rep.name = "mzi-two-param";
  rep.inputs = {{"t", "phi", "t_m", "w"}, (RVec(4) << t, phi, t_m, w).finished()};

  const FockBasis basis(2, 1);
  const ParametricModel model = two_param_mzi_model(basis);
  const RVec point = (RVec(2) << phi, t).finished();
  const DensityOperator rho = model.state_at(point);
  const auto drhos = model.state_derivatives(point);

  const QfimResult qr = qfim(rho, drhos);
  const double h_phi = 4.0 * t * t * (1.0 - t * t);
  const double h_t = 4.0 / (1.0 - t * t);
  rep.add("h_phiphi", qr.h(0, 0), h_phi, 1e-8, "4 t^2 (1 - t^2)");
  rep.add("h_tt", qr.h(1, 1), h_t, 1e-8, "4 / (1 - t^2)");
  rep.add("h_offdiag", qr.h(0, 1), 0.0, 1e-8, "diagonal QFI matrix");
  rep.add("d_raw_phit", qr.d_raw(0, 1), -4.0 * t, 1e-8, "weak commutator -4t (nonzero)");
  rep.add("sld_residual", qr.max_residual, 0.0, 1e-8, "SLD defining equation");

  // One recombiner setting: two click probabilities cannot resolve two
  // parameters, so the 2x2 information matrix is singular.
  const Povm counting = joint_photon_number_povm(basis);
  const Povm meas = povm_after(beam_splitter(basis, t_m, 0, 1), counting);
  const FimValue f_single = classical_fim(outcome_distribution(rho, meas),
                                          model.probability_jacobian(point, meas));
  const double fro2 = f_single.matrix.squaredNorm();
  rep.add("fim_single_relative_det", std::abs(f_single.matrix.determinant()) / std::max(fro2, 1e-300),
          0.0, 1e-12, "singular for any t_m");

  // Alternated strategy: weight w on the phase setting (t_m = 1/sqrt(2)),
  // 1 - w on the transmittivity setting (t_m = 0).
  Povm alternated{basis, {}, {}};
  const Povm meas_phase = povm_after(beam_splitter(basis, kInvSqrt2, 0, 1), counting);
  const Povm meas_t = povm_after(beam_splitter(basis, 0.0, 0, 1), counting);
  for (std::size_t i = 0; i < meas_phase.effects.size(); ++i) {
    alternated.effects.push_back(w * meas_phase.effects[i]);
    alternated.labels.push_back("phase:" + meas_phase.labels[i]);
  }
  for (std::size_t i = 0; i < meas_t.effects.size(); ++i) {
    alternated.effects.push_back((1.0 - w) * meas_t.effects[i]);
    alternated.labels.push_back("t:" + meas_t.labels[i]);
  }
  const FisherReport info = fisher_report(rho, drhos, &alternated);
  const EffectiveFi eff = effective_fi(info.f);
  const bool at_half_pi = std::abs(phi - 0.5 * kPi) < 1e-12;
  if (at_half_pi) {
    rep.add("f_eff_phi", eff.first, w * h_phi, 1e-9, "w H_phiphi at phi = pi/2");
    rep.add("f_eff_t", eff.second, (1.0 - w) * h_t, 1e-9, "(1 - w) H_tt");
  } else {
    rep.add_exploratory("f_eff_phi", eff.first, "effective information on phi");
    rep.add_exploratory("f_eff_t", eff.second, "effective information on t");
  }
  rep.add("upsilon", info.upsilon, 1.0, 1e-9, "extraction efficiency 1 for any w");
  rep.add("invariant_violation", info.invariant_violation(), 0.0, 1e-8,
          "F, H symmetric; H - F PSD; upsilon within [0, P]");
  return rep;
}

// ---------------------------------------------------------------------------
// Displacement estimation

ScenarioReport displacement_estimation(double alpha_re, double alpha_im, int nmax) {
  ScenarioReport rep;
  rep.name = "displacement";
  rep.inputs = {{"alpha_re", "alpha_im"}, (RVec(2) << alpha_re, alpha_im).finished()};
  const cxd alpha(alpha_re, alpha_im);
  if (std::norm(alpha) > 0.25 * nmax)
    throw Error("displacement_estimation: |alpha|^2 too large for the cutoff");

  const FockBasis basis(1, nmax);
  const ModeOps ops = mode_ops(basis, 0);
  const double sq2 = std::sqrt(2.0);
  const std::vector<LinearOperator> gens{{basis, sq2 * ops.p.mat}, {basis, -sq2 * ops.x.mat}};
  const ParametricModel model = ParametricModel::unitary(gens, vacuum_state(basis), {"alpha_re", "alpha_im"});

  const RVec point = (RVec(2) << alpha_re, alpha_im).finished();
  const DensityOperator rho = model.state_at(point);
  const StateVector target_coherent = coherent_state(basis, alpha);
  rep.add("coherent_fidelity", std::real(target_coherent.amps.dot(rho.mat * target_coherent.amps)),
          1.0, 1e-8, "displaced vacuum is the coherent state");

  const FisherReport info = fisher_report(rho, model.state_derivatives(point));
  rep.add("h_00", info.h(0, 0), 4.0, 1e-7, "QFI matrix 4 I");
  rep.add("h_11", info.h(1, 1), 4.0, 1e-7, "QFI matrix 4 I");
  rep.add("h_01", info.h(0, 1), 0.0, 1e-7, "QFI matrix 4 I");
  rep.add("d_raw_01", info.d_raw(0, 1), -4.0, 1e-7, "weak commutator");
  rep.add("d_01_imag", std::imag(info.d(0, 1)), -4.0, 1e-7, "D-invariant convention: D_01 = -4i");

  if (!info.has_j) throw Error("displacement_estimation: RLD inverse unavailable");
  const CMat& j_inv = info.j_inv;
  rep.add("jinv_00_re", std::real(j_inv(0, 0)), 0.25, 1e-7, "J^-1 = (1/4)[[1,-i],[i,1]]");
  rep.add("jinv_11_re", std::real(j_inv(1, 1)), 0.25, 1e-7, "J^-1 = (1/4)[[1,-i],[i,1]]");
  rep.add("jinv_01_re", std::real(j_inv(0, 1)), 0.0, 1e-7, "J^-1 = (1/4)[[1,-i],[i,1]]");
  rep.add("jinv_01_im", std::imag(j_inv(0, 1)), -0.25, 1e-7, "J^-1 = (1/4)[[1,-i],[i,1]]");
  rep.add("im_jinv_trace_norm", trace_norm(j_inv.imag().cast<cxd>()), 0.5, 1e-9, "|Im J^-1|_1 = 1/2");

  const ScalarBounds bounds = scalar_bounds(RVec::Ones(2), info.h, &j_inv, 1);
  rep.add("sld_bound", bounds.sld, 0.5, 1e-9, "Tr[W H^-1] at W = I");
  rep.add("rld_bound", bounds.rld, 1.0, 1e-9, "RLD bound at W = I");
  rep.add("rld_exceeds_sld", bounds.rld - bounds.sld, 0.5, 1e-9,
          "the RLD bound is the informative one here");
  return rep;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

double get(const std::map<std::string, double>& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw Error("scenario: missing parameter " + key);
  return it->second;
}

int get_int(const std::map<std::string, double>& m, const std::string& key) {
  const double v = get(m, key);
  const int i = static_cast<int>(std::lround(v));
  if (std::abs(v - i) > 1e-9) throw Error("scenario: parameter " + key + " must be an integer");
  return i;
}

ParametricModel mzi_outcome_model(double t) {
  const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
  const double vis = 2.0 * t * r;
  return ParametricModel::discrete(
      2, {"phi"},
      [vis](const RVec& p) {
        RVec probs(2);
        probs << 0.5 * (1.0 + vis * std::cos(p[0])), 0.5 * (1.0 - vis * std::cos(p[0]));
        return probs;
      },
      [vis](const RVec& p) {
        RMat jac(2, 1);
        jac << -0.5 * vis * std::sin(p[0]), 0.5 * vis * std::sin(p[0]);
        return jac;
      });
}

std::vector<ScenarioDef> make_registry() {
  std::vector<ScenarioDef> defs;

  defs.push_back({"mzi-single-photon",
                  "single-photon interferometer: classical and quantum information",
                  {{"t", kInvSqrt2, "first splitter transmittivity"},
                   {"phi", 0.5 * kPi, "phase to estimate"}},
                  2,
                  [](const auto& p, int, std::uint64_t) {
                    return mzi_single_photon(get(p, "t"), get(p, "phi"));
                  },
                  [](const auto& p) { return mzi_outcome_model(get(p, "t")); },
                  "phi"});

  defs.push_back({"mzi-coherent",
                  "coherent light: shot-noise-limited phase estimation",
                  {{"alpha", 1.5, "coherent amplitude (real)"}, {"phi", 0.5 * kPi, "phase"}},
                  16,
                  [](const auto& p, int nmax, std::uint64_t) {
                    return mzi_coherent(get(p, "alpha"), get(p, "phi"), nmax);
                  },
                  nullptr,
                  ""});

  defs.push_back({"mzi-squeezed",
                  "coherent + squeezed-vacuum input with detector efficiency",
                  {{"alpha", 2.0, "coherent amplitude"},
                   {"s", 0.5, "squeezing parameter"},
                   {"eta", 0.9, "detector efficiency"}},
                  30,
                  [](const auto& p, int nmax, std::uint64_t) {
                    return mzi_squeezed(get(p, "alpha"), get(p, "s"), get(p, "eta"), nmax);
                  },
                  nullptr,
                  ""});

  defs.push_back({"noon-lossy",
                  "N00N probe under loss with full-detection post-selection",
                  {{"n", 3, "photon number"},
                   {"eta", 0.8, "transmission"},
                   {"v", 1.0, "fringe visibility"}},
                  6,
                  [](const auto& p, int, std::uint64_t) {
                    return noon_lossy(get_int(p, "n"), get(p, "eta"), get(p, "v"));
                  },
                  nullptr,
                  ""});

  defs.push_back({"fixed-n-optimize",
                  "optimal fixed-photon-number probe for a lossy interferometer",
                  {{"n", 3, "photon number"}, {"eta", 0.8, "transmission"}},
                  6,
                  [](const auto& p, int, std::uint64_t seed) {
                    return fixed_n_optimize(get_int(p, "n"), get(p, "eta"), seed);
                  },
                  nullptr,
                  ""});

  defs.push_back({"mzi-two-param",
                  "joint phase + transmittivity estimation in the MZI",
                  {{"t", kInvSqrt2, "first splitter transmittivity"},
                   {"phi", 0.5 * kPi, "phase"},
                   {"t_m", kInvSqrt2, "measurement splitter"},
                   {"w", 0.5, "weight of the phase setting"}},
                  2,
                  [](const auto& p, int, std::uint64_t) {
                    return mzi_two_param(get(p, "t"), get(p, "phi"), get(p, "t_m"), get(p, "w"));
                  },
                  nullptr,
                  ""});

  defs.push_back({"displacement",
                  "joint estimation of the real and imaginary displacement",
                  {{"alpha_re", 0.5, "Re alpha"}, {"alpha_im", 0.3, "Im alpha"}},
                  20,
                  [](const auto& p, int nmax, std::uint64_t) {
                    return displacement_estimation(get(p, "alpha_re"), get(p, "alpha_im"), nmax);
                  },
                  nullptr,
                  ""});
  return defs;
}

}  // namespace

const std::vector<ScenarioDef>& scenario_registry() {
  static const std::vector<ScenarioDef> defs = make_registry();
  return defs;
}

const ScenarioDef* find_scenario(const std::string& name) {
  for (const auto& d : scenario_registry())
    if (d.name == name) return &d;
  return nullptr;
}

}  // namespace qmetro
