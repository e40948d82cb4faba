#pragma once

#include <span>
#include <string>
#include <vector>

#include "qmetro/linalg.hpp"

namespace qmetro {

// Quadrature normalization x = sqrt(N0)(a^dag + a); all built-in operators
// use N0 = 1/2.  Conversions to other conventions are pure rescalings.
inline constexpr double kN0 = 0.5;
inline double quadrature_rescale(double value_at_half, double n0_target) {
  return value_at_half * (n0_target / kN0);
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Truncated multimode Fock space with a common per-mode photon cutoff.
// Occupation tuples are enumerated lexicographically with mode 0 slowest:
// index = sum_m occ[m] * (cutoff+1)^(n_modes-1-m).
class FockBasis {
public:
  FockBasis(int n_modes, int cutoff);

  int modes() const { return n_modes_; }
  int cutoff() const { return cutoff_; }
  int dim_per_mode() const { return cutoff_ + 1; }
  Eigen::Index dim() const { return dim_; }

  int occupation(Eigen::Index index, int mode) const;
  Eigen::Index index_of(std::span<const int> occ) const;
  std::vector<int> occupations(Eigen::Index index) const;

  // True when no mode occupation sits at the cutoff; operator identities
  // such as [a, a^dag] = 1 only hold on this interior block.
  bool interior(Eigen::Index index) const;

  bool operator==(const FockBasis& o) const { return n_modes_ == o.n_modes_ && cutoff_ == o.cutoff_; }

private:
  int n_modes_;
  int cutoff_;
  Eigen::Index dim_;
  std::vector<Eigen::Index> stride_;
};

struct StateVector {
  FockBasis basis;
  CVec amps;
  double discarded_tail = 0.0;  // probability mass lost to truncation

  double norm() const { return amps.norm(); }
};

struct DensityOperator {
  FockBasis basis;
  CMat mat;

  static DensityOperator pure(const StateVector& psi);
  double trace_error() const { return std::abs(mat.trace() - cxd(1.0, 0.0)); }
};

struct LinearOperator {
  FockBasis basis;
  CMat mat;
};

struct ModeOps {
  LinearOperator annihilation, creation, number, x, p;
};

// Ladder and quadrature operators acting on one mode of the basis.
ModeOps mode_ops(const FockBasis& basis, int mode);
// Generalized quadrature cos(theta) x + sin(theta) p.
LinearOperator quadrature(const FockBasis& basis, int mode, double theta);

// --- state constructors ----------------------------------------------------
// Each reports the Fock-tail probability discarded by the cutoff and throws
// when it exceeds tail_tol.

StateVector coherent_state(const FockBasis& basis, cxd alpha, double tail_tol = 1e-6);
StateVector squeezed_vacuum(const FockBasis& basis, double s, double theta, double tail_tol = 1e-6);
StateVector two_mode_squeezed(const FockBasis& basis, double s, double theta, double tail_tol = 1e-6);
// sum_k beta[k] |k, N-k> on a two-mode basis, N = beta.size()-1.
StateVector fixed_n_state(const FockBasis& basis, const CVec& beta);
StateVector vacuum_state(const FockBasis& basis);
StateVector basis_state(const FockBasis& basis, std::span<const int> occ);
// |a> (modes first) joined with |b>; cutoffs must match.
StateVector tensor_product(const StateVector& a, const StateVector& b);

// --- linear optics ----------------------------------------------------------

// Unitary exp[theta(a_1^dag a_2 - a_1 a_2^dag)], theta = atan2(r, t), whose
// Heisenberg action is x1' = t x1 + r x2, x2' = t x2 - r x1 with r = sqrt(1-t^2).
// Exactly unitary on the truncated space (diagonalized per photon-number
// sector); the quadrature relations hold on the cutoff-interior block only.
LinearOperator beam_splitter(const FockBasis& basis, double t, int mode_a, int mode_b);
// Diagonal unitary exp(-i n phi) on one mode.
LinearOperator phase_shifter(const FockBasis& basis, double phi, int mode);
// Displacement exp(alpha a^dag - conj(alpha) a) on one mode.
LinearOperator displacement(const FockBasis& basis, cxd alpha, int mode);

StateVector apply(const LinearOperator& u, const StateVector& psi);
DensityOperator evolve(const LinearOperator& u, const DensityOperator& rho);

// Photon loss: couples the mode to a vacuum ancilla through a beam splitter
// with t = sqrt(eta), then traces the ancilla out.
DensityOperator loss_channel(const DensityOperator& rho, double eta, int mode);
// The same channel factored into its Kraus operators on a single mode
// (columns of the beam-splitter construction); agrees with loss_channel.
std::vector<CMat> loss_kraus(int cutoff, double eta);

// Traces out one mode, returning a state on a basis with one mode fewer.
DensityOperator partial_trace(const DensityOperator& rho, int mode);

// --- measurement ------------------------------------------------------------

struct Povm {
  FockBasis basis;
  std::vector<CMat> effects;
  std::vector<std::string> labels;

  // max |sum effects - 1|
  double completeness_error() const;
};

// Click/no-click detector with efficiency eta and dark-count probability:
// Pi_0 = (1-dark) sum_n (1-eta)^n |n><n|, Pi_1 = 1 - Pi_0.
Povm on_off_povm(const FockBasis& basis, int mode, double eta = 1.0, double dark = 0.0);
// Photon-number discriminator with binomial smearing for eta < 1.
Povm photon_number_povm(const FockBasis& basis, int mode, double eta = 1.0);
// Joint photon counting on every mode, common efficiency.
Povm joint_photon_number_povm(const FockBasis& basis, double eta = 1.0);
// Projective measurement in the eigenbasis of a Hermitian operator;
// eigenvalues closer than merge_tol_rel * spectral range share a projector.
Povm eigenbasis_povm(const LinearOperator& op, double merge_tol_rel = 1e-8);

// Born probabilities Tr[rho Pi_i]; clips values in [-1e-12, 0) to zero and
// checks normalization to 1e-9.
RVec outcome_distribution(const DensityOperator& rho, const Povm& povm);

// --- expectation helpers ----------------------------------------------------

double expectation(const DensityOperator& rho, const LinearOperator& op);
double expectation(const StateVector& psi, const LinearOperator& op);
double variance(const DensityOperator& rho, const LinearOperator& op);
double variance(const StateVector& psi, const LinearOperator& op);

}  // namespace qmetro
