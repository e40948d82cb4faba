#pragma once

#include <vector>

#include "qmetro/fock.hpp"

namespace qmetro {

// Classical Fisher information sum_x (dp_x)^2 / p_x.  Outcomes with
// probability below p_floor contribute only if the derivative also vanishes
// (the probability is floored, bounding the term); otherwise the point is
// singular and reported as divergent rather than thrown, so parameter scans
// survive isolated fringe zeros.
struct FiValue {
  double value = 0.0;
  bool divergent = false;
  std::vector<int> divergent_outcomes;
};
FiValue classical_fi(const RVec& probs, const RVec& dprobs, double p_floor = 1e-12,
                     double dp_tol = 1e-9);

struct FimValue {
  RMat matrix;
  bool divergent = false;
  std::vector<int> divergent_outcomes;
};
// F_{h,k} = sum_x dp_h dp_k / p from a (outcomes x params) Jacobian.
FimValue classical_fim(const RVec& probs, const RMat& jacobian, double p_floor = 1e-12,
                       double dp_tol = 1e-9);

// Symmetric logarithmic derivative: solves drho = (L rho + rho L)/2 in the
// eigenbasis of rho, zeroing matrix elements outside the support
// (lambda_i + lambda_j <= support_eps * lambda_max).
struct SldResult {
  CMat op;
  double residual;  // Frobenius norm of (L rho + rho L)/2 - drho
};
SldResult sld(const DensityOperator& rho, const CMat& drho, double support_eps = 1e-10,
              double residual_tol = 1e-7);

double qfi(const DensityOperator& rho, const CMat& drho, double support_eps = 1e-10);
double qfi_pure(const CVec& psi, const CVec& dpsi);
// 4 Var(G) on |psi> for a unitary family exp(-i phi G).
double qfi_generator(const CVec& psi, const CMat& generator);

// Multiparameter SLD quantities.  H is the real symmetric QFI matrix
// (1/2)Tr[rho {L_h, L_k}].  The weak commutators (i/2)Tr[rho [L_h, L_k]] are
// real and antisymmetric and are kept in d_raw; d = i * d_raw is the
// Hermitian form in which the D-invariant identity below reproduces the
// conventional RLD inverse.
struct QfimResult {
  RMat h;
  RMat d_raw;
  CMat d;
  std::vector<CMat> slds;
  double max_residual;
};
QfimResult qfim(const DensityOperator& rho, const std::vector<CMat>& drhos,
                double support_eps = 1e-10);

// Right logarithmic derivative information matrix J_{h,k} = Tr[R_h^dag rho R_k]
// with R_h = rho^{-1} drho_h; requires full rank.
CMat rld_fim(const DensityOperator& rho, const std::vector<CMat>& drhos, double rank_eps = 1e-10);

// D-invariant (pure-model) RLD inverse J^{-1} = H^{-1} + H^{-1} D H^{-1}.
CMat rld_pure_d_invariant(const RMat& h, const CMat& d);

// Weighted scalar bounds on sum_h w_h Var(phi_h) for M repetitions:
//   SLD: Tr[W H^{-1}]/M
//   RLD: (Tr[W Re J^{-1}] + || sqrt(W) Im J^{-1} sqrt(W) ||_1)/M
// In the D-invariant case the RLD bound coincides with the Holevo bound.
struct ScalarBounds {
  double sld = 0.0;
  double rld = 0.0;
  bool has_rld = false;
};
ScalarBounds scalar_bounds(const RVec& weights, const RMat& h, const CMat* j_inv, long m = 1);

// Tr[F H^{-1}] in [0, P]; values within 1e-9 of an edge are clamped to it.
double extraction_efficiency(const RMat& f, const RMat& h);

// B F B^T for a reparametrization with B_{i,j} = d phi_j / d theta_i.
RMat reparametrize(const RMat& fim, const RMat& b);

// Effective single-parameter informations of a 2x2 matrix:
// F_eff_h = F_hh - F_hk^2 / F_kk.
struct EffectiveFi {
  double first;
  double second;
};
EffectiveFi effective_fi(const RMat& f);

// Aggregate of the information quantities for one (model point, measurement).
struct FisherReport {
  RMat f;            // classical FIM for the chosen measurement (zero if none)
  RMat h;            // SLD QFI matrix
  RMat d_raw;        // weak commutators, real antisymmetric
  CMat d;            // i * d_raw (Hermitian, D-invariant convention)
  CMat j_inv;        // RLD inverse when defined
  bool has_j = false;
  bool has_f = false;
  std::vector<CMat> slds;
  double upsilon = 0.0;

  // Worst violation of the structural invariants: F and H symmetric,
  // H - F positive semidefinite, upsilon within [0, P].
  double invariant_violation() const;
};

// Assembles the report: QFI matrix and weak commutators always; the
// classical FIM and extraction efficiency when a POVM is given; the RLD
// inverse through rld_fim for full-rank states or through the D-invariant
// identity for pure ones.
FisherReport fisher_report(const DensityOperator& rho, const std::vector<CMat>& drhos,
                           const Povm* povm = nullptr);

}  // namespace qmetro
