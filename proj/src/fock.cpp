#include "qmetro/fock.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace qmetro {

namespace {

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

void check_mode(const FockBasis& basis, int mode, const char* who) {
  if (mode < 0 || mode >= basis.modes())
    throw Error(std::string(who) + ": mode index " + std::to_string(mode) + " out of range");
}

}  // namespace

FockBasis::FockBasis(int n_modes, int cutoff) : n_modes_(n_modes), cutoff_(cutoff) {
  if (n_modes < 1) throw Error("FockBasis: need at least one mode");
  if (cutoff < 1) throw Error("FockBasis: cutoff must be >= 1");
  double d = std::pow(static_cast<double>(cutoff + 1), n_modes);
  if (d > 4e6) throw Error("FockBasis: truncated dimension too large");
  dim_ = static_cast<Eigen::Index>(std::llround(d));
  stride_.resize(n_modes_);
  Eigen::Index s = 1;
  for (int m = n_modes_ - 1; m >= 0; --m) {
    stride_[m] = s;
    s *= dim_per_mode();
  }
}

int FockBasis::occupation(Eigen::Index index, int mode) const {
  return static_cast<int>((index / stride_[mode]) % dim_per_mode());
}

Eigen::Index FockBasis::index_of(std::span<const int> occ) const {
  if (static_cast<int>(occ.size()) != n_modes_) throw Error("FockBasis: occupation tuple length mismatch");
  Eigen::Index idx = 0;
  for (int m = 0; m < n_modes_; ++m) {
    if (occ[m] < 0 || occ[m] > cutoff_) throw Error("FockBasis: occupation outside cutoff");
    idx += occ[m] * stride_[m];
  }
  return idx;
}

std::vector<int> FockBasis::occupations(Eigen::Index index) const {
  std::vector<int> occ(n_modes_);
  for (int m = 0; m < n_modes_; ++m) occ[m] = occupation(index, m);
  return occ;
}

bool FockBasis::interior(Eigen::Index index) const {
  for (int m = 0; m < n_modes_; ++m)
    if (occupation(index, m) == cutoff_) return false;
  return true;
}

DensityOperator DensityOperator::pure(const StateVector& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-10) throw Error("DensityOperator::pure: state not normalized");
  return {psi.basis, psi.amps * psi.amps.adjoint()};
}

ModeOps mode_ops(const FockBasis& basis, int mode) {
  check_mode(basis, mode, "mode_ops");
  const Eigen::Index d = basis.dim();
  CMat a = CMat::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const int n = basis.occupation(j, mode);
    if (n > 0) {
      auto occ = basis.occupations(j);
      occ[mode] = n - 1;
      a(basis.index_of(occ), j) = std::sqrt(static_cast<double>(n));
    }
  }
  CMat adag = a.adjoint();
  const double s = std::sqrt(kN0);
  ModeOps ops{{basis, a},
              {basis, adag},
              {basis, adag * a},
              {basis, s * (adag + a)},
              {basis, kImag * s * (adag - a)}};
  return ops;
}

LinearOperator quadrature(const FockBasis& basis, int mode, double theta) {
  const ModeOps ops = mode_ops(basis, mode);
  return {basis, std::cos(theta) * ops.x.mat + std::sin(theta) * ops.p.mat};
}

namespace {

StateVector finish_state(const FockBasis& basis, CVec amps, double tail, double tail_tol, const char* who) {
  if (tail > tail_tol)
    throw Error(std::string(who) + ": truncation discards probability " + std::to_string(tail) +
                " (> tolerance); raise the cutoff");
  amps /= amps.norm();
  return {basis, std::move(amps), tail};
}

}  // namespace

StateVector vacuum_state(const FockBasis& basis) {
  CVec amps = CVec::Zero(basis.dim());
  amps[0] = 1.0;
  return {basis, std::move(amps), 0.0};
}

StateVector basis_state(const FockBasis& basis, std::span<const int> occ) {
  CVec amps = CVec::Zero(basis.dim());
  amps[basis.index_of(occ)] = 1.0;
  return {basis, std::move(amps), 0.0};
}

StateVector coherent_state(const FockBasis& basis, cxd alpha, double tail_tol) {
  if (basis.modes() != 1) throw Error("coherent_state: single-mode basis required");
  CVec amps = CVec::Zero(basis.dim());
  // amplitudes alpha^n / sqrt(n!) times exp(-|alpha|^2/2)
  cxd term = std::exp(-0.5 * std::norm(alpha));
  double kept = 0.0;
  for (int n = 0; n <= basis.cutoff(); ++n) {
    amps[n] = term;
    kept += std::norm(term);
    term *= alpha / std::sqrt(static_cast<double>(n + 1));
  }
  return finish_state(basis, std::move(amps), std::max(0.0, 1.0 - kept), tail_tol, "coherent_state");
}

StateVector squeezed_vacuum(const FockBasis& basis, double s, double theta, double tail_tol) {
  if (basis.modes() != 1) throw Error("squeezed_vacuum: single-mode basis required");
  if (s < 0.0) throw Error("squeezed_vacuum: s must be >= 0");
  CVec amps = CVec::Zero(basis.dim());
  // sech^(1/2)(s) sum_m sqrt((2m)!)/m! [-(1/2) e^{i theta} tanh s]^m |2m>
  const cxd ratio_base = -0.5 * std::exp(kImag * theta) * std::tanh(s);
  cxd term = std::sqrt(1.0 / std::cosh(s));
  double kept = 0.0;
  for (int m = 0; 2 * m <= basis.cutoff(); ++m) {
    amps[2 * m] = term;
    kept += std::norm(term);
    term *= ratio_base * std::sqrt((2.0 * m + 2.0) * (2.0 * m + 1.0)) / (m + 1.0);
  }
  return finish_state(basis, std::move(amps), std::max(0.0, 1.0 - kept), tail_tol, "squeezed_vacuum");
}

StateVector two_mode_squeezed(const FockBasis& basis, double s, double theta, double tail_tol) {
  if (basis.modes() != 2) throw Error("two_mode_squeezed: two-mode basis required");
  if (s < 0.0) throw Error("two_mode_squeezed: s must be >= 0");
  CVec amps = CVec::Zero(basis.dim());
  const cxd ratio = -std::exp(kImag * theta) * std::tanh(s);
  cxd term = 1.0 / std::cosh(s);
  double kept = 0.0;
  for (int n = 0; n <= basis.cutoff(); ++n) {
    const int occ[2] = {n, n};
    amps[basis.index_of(occ)] = term;
    kept += std::norm(term);
    term *= ratio;
  }
  return finish_state(basis, std::move(amps), std::max(0.0, 1.0 - kept), tail_tol, "two_mode_squeezed");
}

StateVector fixed_n_state(const FockBasis& basis, const CVec& beta) {
  if (basis.modes() != 2) throw Error("fixed_n_state: two-mode basis required");
  const int n_total = static_cast<int>(beta.size()) - 1;
  if (n_total < 0) throw Error("fixed_n_state: empty coefficient vector");
  if (n_total > basis.cutoff()) throw Error("fixed_n_state: photon number exceeds cutoff");
  if (std::abs(beta.norm() - 1.0) > 1e-10) throw Error("fixed_n_state: coefficients not normalized");
  CVec amps = CVec::Zero(basis.dim());
  for (int k = 0; k <= n_total; ++k) {
    const int occ[2] = {k, n_total - k};
    amps[basis.index_of(occ)] = beta[k];
  }
  return {basis, std::move(amps), 0.0};
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
  if (a.basis.cutoff() != b.basis.cutoff()) throw Error("tensor_product: cutoffs differ");
  FockBasis basis(a.basis.modes() + b.basis.modes(), a.basis.cutoff());
  CVec amps(basis.dim());
  for (Eigen::Index i = 0; i < a.amps.size(); ++i)
    for (Eigen::Index j = 0; j < b.amps.size(); ++j) amps[i * b.amps.size() + j] = a.amps[i] * b.amps[j];
  return {basis, std::move(amps), a.discarded_tail + b.discarded_tail};
}

LinearOperator beam_splitter(const FockBasis& basis, double t, int mode_a, int mode_b) {
  check_mode(basis, mode_a, "beam_splitter");
  check_mode(basis, mode_b, "beam_splitter");
  if (mode_a == mode_b) throw Error("beam_splitter: modes must differ");
  if (t < 0.0 || t > 1.0) throw Error("beam_splitter: transmittivity outside [0, 1]");
  const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
  const double theta = std::atan2(r, t);

  const Eigen::Index d = basis.dim();
  CMat u = CMat::Zero(d, d);

  // The generator a_a^dag a_b - a_a a_b^dag conserves n_a + n_b, so the
  // unitary is assembled sector by sector: group indices by the occupations
  // of the untouched modes and the pair total, exponentiate the small
  // tridiagonal block, and scatter it back.
  std::map<std::pair<Eigen::Index, int>, std::vector<std::pair<Eigen::Index, int>>> sectors;
  for (Eigen::Index idx = 0; idx < d; ++idx) {
    const int na = basis.occupation(idx, mode_a);
    const int nb = basis.occupation(idx, mode_b);
    auto occ = basis.occupations(idx);
    occ[mode_a] = 0;
    occ[mode_b] = 0;
    sectors[{basis.index_of(occ), na + nb}].push_back({idx, na});
  }

  for (auto& [key, members] : sectors) {
    std::sort(members.begin(), members.end(),
              [](const auto& l, const auto& rr) { return l.second < rr.second; });
    const int n_total = key.second;
    const int sz = static_cast<int>(members.size());
    if (sz == 1) {
      u(members[0].first, members[0].first) = 1.0;
      continue;
    }
    // Hermitian K = i(a_a^dag a_b - a_a a_b^dag) restricted to the sector.
    CMat k = CMat::Zero(sz, sz);
    for (int i = 0; i + 1 < sz; ++i) {
      const int na = members[i].second;
      const int nb = n_total - na;
      const double g = std::sqrt(static_cast<double>(nb) * (na + 1.0));
      k(i + 1, i) = kImag * g;
      k(i, i + 1) = -kImag * g;
    }
    const CMat ub = herm_exp(k, cxd(0.0, -theta));
    for (int i = 0; i < sz; ++i)
      for (int j = 0; j < sz; ++j) u(members[i].first, members[j].first) = ub(i, j);
  }
  return {basis, std::move(u)};
}

LinearOperator phase_shifter(const FockBasis& basis, double phi, int mode) {
  check_mode(basis, mode, "phase_shifter");
  CVec diag(basis.dim());
  for (Eigen::Index j = 0; j < basis.dim(); ++j)
    diag[j] = std::exp(-kImag * (phi * basis.occupation(j, mode)));
  return {basis, CMat(diag.asDiagonal())};
}

LinearOperator displacement(const FockBasis& basis, cxd alpha, int mode) {
  const ModeOps ops = mode_ops(basis, mode);
  // exp(alpha a^dag - conj(alpha) a) = exp(-i K), K Hermitian
  const CMat k = kImag * (alpha * ops.creation.mat - std::conj(alpha) * ops.annihilation.mat);
  return {basis, herm_exp(k, cxd(0.0, -1.0))};
}

StateVector apply(const LinearOperator& u, const StateVector& psi) {
  if (!(u.basis == psi.basis)) throw Error("apply: basis mismatch");
  return {psi.basis, u.mat * psi.amps, psi.discarded_tail};
}

DensityOperator evolve(const LinearOperator& u, const DensityOperator& rho) {
  if (!(u.basis == rho.basis)) throw Error("evolve: basis mismatch");
  return {rho.basis, u.mat * rho.mat * u.mat.adjoint()};
}

DensityOperator partial_trace(const DensityOperator& rho, int mode) {
  check_mode(rho.basis, mode, "partial_trace");
  if (rho.basis.modes() < 2) throw Error("partial_trace: need at least two modes");
  const FockBasis out_basis(rho.basis.modes() - 1, rho.basis.cutoff());
  const int per = rho.basis.dim_per_mode();
  CMat out = CMat::Zero(out_basis.dim(), out_basis.dim());

  std::vector<Eigen::Index> embed(out_basis.dim());
  std::vector<int> occ_full(rho.basis.modes());
  for (Eigen::Index i = 0; i < out_basis.dim(); ++i) {
    const auto occ = out_basis.occupations(i);
    for (int m = 0, f = 0; m < rho.basis.modes(); ++m)
      occ_full[m] = (m == mode) ? 0 : occ[f++];
    embed[i] = rho.basis.index_of(occ_full);
  }
  Eigen::Index stride = 1;
  for (int m = rho.basis.modes() - 1; m > mode; --m) stride *= per;

  for (Eigen::Index i = 0; i < out_basis.dim(); ++i)
    for (Eigen::Index j = 0; j < out_basis.dim(); ++j) {
      cxd s = 0.0;
      for (int k = 0; k < per; ++k) s += rho.mat(embed[i] + k * stride, embed[j] + k * stride);
      out(i, j) = s;
    }
  return {out_basis, std::move(out)};
}

DensityOperator loss_channel(const DensityOperator& rho, double eta, int mode) {
  check_mode(rho.basis, mode, "loss_channel");
  if (eta < 0.0 || eta > 1.0) throw Error("loss_channel: eta outside [0, 1]");
  if (eta == 1.0) return rho;

  const FockBasis ext(rho.basis.modes() + 1, rho.basis.cutoff());
  const int anc = rho.basis.modes();  // appended mode varies fastest
  CMat vac = CMat::Zero(rho.basis.dim_per_mode(), rho.basis.dim_per_mode());
  vac(0, 0) = 1.0;
  DensityOperator rho_ext{ext, kron(rho.mat, vac)};
  const LinearOperator u = beam_splitter(ext, std::sqrt(eta), mode, anc);
  return partial_trace(evolve(u, rho_ext), anc);
}

std::vector<CMat> loss_kraus(int cutoff, double eta) {
  const FockBasis pair(2, cutoff);
  const LinearOperator u = beam_splitter(pair, std::sqrt(std::min(1.0, std::max(0.0, eta))), 0, 1);
  const int per = cutoff + 1;
  std::vector<CMat> kraus(per, CMat::Zero(per, per));
  // A_k[m, n] = <m, k| U |n, 0>
  for (int k = 0; k < per; ++k)
    for (int m = 0; m < per; ++m)
      for (int n = 0; n < per; ++n) kraus[k](m, n) = u.mat(m * per + k, n * per);
  return kraus;
}

double Povm::completeness_error() const {
  CMat sum = CMat::Zero(basis.dim(), basis.dim());
  for (const auto& e : effects) sum += e;
  return (sum - CMat::Identity(basis.dim(), basis.dim())).cwiseAbs().maxCoeff();
}

Povm on_off_povm(const FockBasis& basis, int mode, double eta, double dark) {
  check_mode(basis, mode, "on_off_povm");
  if (eta < 0.0 || eta > 1.0) throw Error("on_off_povm: eta outside [0, 1]");
  if (dark < 0.0 || dark > 1.0) throw Error("on_off_povm: dark-count probability outside [0, 1]");
  CVec no_click(basis.dim());
  for (Eigen::Index j = 0; j < basis.dim(); ++j)
    no_click[j] = (1.0 - dark) * std::pow(1.0 - eta, basis.occupation(j, mode));
  CMat pi0 = no_click.asDiagonal();
  CMat pi1 = CMat::Identity(basis.dim(), basis.dim()) - pi0;
  return {basis, {std::move(pi0), std::move(pi1)}, {"no_click", "click"}};
}

Povm photon_number_povm(const FockBasis& basis, int mode, double eta) {
  check_mode(basis, mode, "photon_number_povm");
  if (eta < 0.0 || eta > 1.0) throw Error("photon_number_povm: eta outside [0, 1]");
  Povm povm{basis, {}, {}};
  for (int m = 0; m <= basis.cutoff(); ++m) {
    CVec diag(basis.dim());
    for (Eigen::Index j = 0; j < basis.dim(); ++j) {
      const int n = basis.occupation(j, mode);
      diag[j] = m > n ? 0.0 : binom(n, m) * std::pow(eta, m) * std::pow(1.0 - eta, n - m);
    }
    povm.effects.push_back(diag.asDiagonal());
    povm.labels.push_back(std::to_string(m));
  }
  return povm;
}

Povm joint_photon_number_povm(const FockBasis& basis, double eta) {
  if (eta < 0.0 || eta > 1.0) throw Error("joint_photon_number_povm: eta outside [0, 1]");
  Povm povm{basis, {}, {}};
  for (Eigen::Index out = 0; out < basis.dim(); ++out) {
    CVec diag(basis.dim());
    for (Eigen::Index j = 0; j < basis.dim(); ++j) {
      double w = 1.0;
      for (int m = 0; m < basis.modes(); ++m) {
        const int n = basis.occupation(j, m);
        const int k = basis.occupation(out, m);
        w *= k > n ? 0.0 : binom(n, k) * std::pow(eta, k) * std::pow(1.0 - eta, n - k);
      }
      diag[j] = w;
    }
    povm.effects.push_back(diag.asDiagonal());
    std::string label;
    for (int m = 0; m < basis.modes(); ++m)
      label += (m ? "," : "") + std::to_string(basis.occupation(out, m));
    povm.labels.push_back(label);
  }
  return povm;
}

Povm eigenbasis_povm(const LinearOperator& op, double merge_tol_rel) {
  if (hermiticity_error(op.mat) > 1e-9) throw Error("eigenbasis_povm: operator is not Hermitian");
  const HermEig eig = herm_eig(op.mat);
  const double range = std::max(1e-300, eig.values[eig.values.size() - 1] - eig.values[0]);
  const double tol = merge_tol_rel * range;

  Povm povm{op.basis, {}, {}};
  Eigen::Index i = 0;
  while (i < eig.values.size()) {
    Eigen::Index j = i + 1;
    while (j < eig.values.size() && eig.values[j] - eig.values[j - 1] <= tol) ++j;
    CMat proj = CMat::Zero(op.mat.rows(), op.mat.cols());
    for (Eigen::Index c = i; c < j; ++c) proj += eig.vectors.col(c) * eig.vectors.col(c).adjoint();
    povm.effects.push_back(std::move(proj));
    povm.labels.push_back("ev=" + std::to_string(eig.values[i]));
    i = j;
  }
  return povm;
}

RVec outcome_distribution(const DensityOperator& rho, const Povm& povm) {
  if (!(rho.basis == povm.basis)) throw Error("outcome_distribution: basis mismatch");
  RVec p(static_cast<Eigen::Index>(povm.effects.size()));
  for (std::size_t i = 0; i < povm.effects.size(); ++i) {
    double v = std::real((rho.mat * povm.effects[i]).trace());
    if (v < 0.0) {
      if (v < -1e-12) throw Error("outcome_distribution: probability below -1e-12");
      v = 0.0;
    }
    p[static_cast<Eigen::Index>(i)] = v;
  }
  if (std::abs(p.sum() - 1.0) > 1e-9) throw Error("outcome_distribution: probabilities do not sum to 1");
  return p;
}

double expectation(const DensityOperator& rho, const LinearOperator& op) {
  return std::real((rho.mat * op.mat).trace());
}

double expectation(const StateVector& psi, const LinearOperator& op) {
  return std::real(psi.amps.dot(op.mat * psi.amps));
}

double variance(const DensityOperator& rho, const LinearOperator& op) {
  const double m = expectation(rho, op);
  return std::real((rho.mat * op.mat * op.mat).trace()) - m * m;
}

double variance(const StateVector& psi, const LinearOperator& op) {
  const CVec opsi = op.mat * psi.amps;
  const double m = std::real(psi.amps.dot(opsi));
  return std::real(opsi.dot(opsi)) - m * m;
}

}  // namespace qmetro
