#include "qmetro/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qmetro {

FiValue classical_fi(const RVec& probs, const RVec& dprobs, double p_floor, double dp_tol) {
  if (probs.size() != dprobs.size()) throw Error("classical_fi: length mismatch");
  if (probs.minCoeff() < -1e-12) throw Error("classical_fi: negative probability");
  FiValue out;
  for (Eigen::Index x = 0; x < probs.size(); ++x) {
    const double p = std::max(probs[x], 0.0);
    const double dp = dprobs[x];
    if (p < p_floor) {
      if (std::abs(dp) >= dp_tol) {
        out.divergent = true;
        out.divergent_outcomes.push_back(static_cast<int>(x));
        continue;
      }
      out.value += dp * dp / p_floor;
    } else {
      out.value += dp * dp / p;
    }
  }
  if (out.divergent) out.value = std::numeric_limits<double>::infinity();
  return out;
}

FimValue classical_fim(const RVec& probs, const RMat& jacobian, double p_floor, double dp_tol) {
  if (probs.size() != jacobian.rows()) throw Error("classical_fim: length mismatch");
  if (probs.minCoeff() < -1e-12) throw Error("classical_fim: negative probability");
  const Eigen::Index np = jacobian.cols();
  FimValue out;
  out.matrix = RMat::Zero(np, np);
  for (Eigen::Index x = 0; x < probs.size(); ++x) {
    const double p = std::max(probs[x], 0.0);
    const double dmax = jacobian.row(x).cwiseAbs().maxCoeff();
    double denom = p;
    if (p < p_floor) {
      if (dmax >= dp_tol) {
        out.divergent = true;
        out.divergent_outcomes.push_back(static_cast<int>(x));
        continue;
      }
      denom = p_floor;
    }
    out.matrix += (jacobian.row(x).transpose() * jacobian.row(x)) / denom;
  }
  out.matrix = 0.5 * (out.matrix + RMat(out.matrix.transpose()));
  return out;
}

namespace {

struct SldBasis {
  HermEig eig;
  double support_cut;
};

SldBasis sld_basis(const DensityOperator& rho, double support_eps) {
  if (hermiticity_error(rho.mat) > 1e-10) throw Error("sld: state not Hermitian");
  if (rho.trace_error() > 1e-10) throw Error("sld: state trace differs from 1");
  SldBasis b{herm_eig(rho.mat), 0.0};
  const double lmax = b.eig.values.maxCoeff();
  if (b.eig.values.minCoeff() < -1e-9) throw Error("sld: state has a negative eigenvalue");
  b.support_cut = support_eps * std::max(lmax, 1e-300);
  return b;
}

// drho expressed in the eigenbasis of rho.
CMat to_eigenbasis(const SldBasis& b, const CMat& drho) { return b.eig.vectors.adjoint() * drho * b.eig.vectors; }

CMat sld_in_eigenbasis(const SldBasis& b, const CMat& dr) {
  const Eigen::Index n = dr.rows();
  CMat l = CMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double denom = b.eig.values[i] + b.eig.values[j];
      if (denom > b.support_cut) l(i, j) = 2.0 * dr(i, j) / denom;
    }
  return l;
}

void check_drho(const CMat& drho) {
  if (hermiticity_error(drho) > 1e-8) throw Error("sld: derivative not Hermitian");
  if (std::abs(drho.trace()) > 1e-8) throw Error("sld: derivative not traceless");
}

}  // namespace

SldResult sld(const DensityOperator& rho, const CMat& drho, double support_eps, double residual_tol) {
  check_drho(drho);
  const SldBasis b = sld_basis(rho, support_eps);
  const CMat dr = to_eigenbasis(b, drho);
  const CMat l_eig = sld_in_eigenbasis(b, dr);
  const CMat l = b.eig.vectors * l_eig * b.eig.vectors.adjoint();
  const double residual = (0.5 * (l * rho.mat + rho.mat * l) - drho).norm();
  if (residual > residual_tol)
    throw Error("sld: defining-equation residual " + std::to_string(residual) +
                " exceeds tolerance; derivative leaves the state support");
  return {l, residual};
}

double qfi(const DensityOperator& rho, const CMat& drho, double support_eps) {
  check_drho(drho);
  const SldBasis b = sld_basis(rho, support_eps);
  const CMat dr = to_eigenbasis(b, drho);
  double h = 0.0;
  for (Eigen::Index i = 0; i < dr.rows(); ++i)
    for (Eigen::Index j = 0; j < dr.cols(); ++j) {
      const double denom = b.eig.values[i] + b.eig.values[j];
      if (denom > b.support_cut) h += 2.0 * std::norm(dr(i, j)) / denom;
    }
  return h;
}

double qfi_pure(const CVec& psi, const CVec& dpsi) {
  if (psi.size() != dpsi.size()) throw Error("qfi_pure: dimension mismatch");
  if (std::abs(psi.norm() - 1.0) > 1e-9) throw Error("qfi_pure: state not normalized");
  const cxd overlap = dpsi.dot(psi);  // <dpsi|psi>
  return 4.0 * (std::real(dpsi.dot(dpsi)) + std::real(overlap * overlap));
}

double qfi_generator(const CVec& psi, const CMat& generator) {
  if (hermiticity_error(generator) > 1e-9) throw Error("qfi_generator: generator not Hermitian");
  const CVec gpsi = generator * psi;
  const double mean = std::real(psi.dot(gpsi));
  return 4.0 * (std::real(gpsi.dot(gpsi)) - mean * mean);
}

QfimResult qfim(const DensityOperator& rho, const std::vector<CMat>& drhos, double support_eps) {
  const int np = static_cast<int>(drhos.size());
  if (np == 0) throw Error("qfim: no derivatives supplied");
  const SldBasis b = sld_basis(rho, support_eps);

  QfimResult out;
  out.h = RMat::Zero(np, np);
  out.d_raw = RMat::Zero(np, np);
  out.slds.reserve(drhos.size());
  out.max_residual = 0.0;

  std::vector<CMat> l_eig;
  for (const auto& drho : drhos) {
    check_drho(drho);
    const CMat dr = to_eigenbasis(b, drho);
    l_eig.push_back(sld_in_eigenbasis(b, dr));
    out.slds.push_back(b.eig.vectors * l_eig.back() * b.eig.vectors.adjoint());
    out.max_residual = std::max(
        out.max_residual, (0.5 * (out.slds.back() * rho.mat + rho.mat * out.slds.back()) - drho).norm());
  }

  const RVec& lam = b.eig.values;
  for (int h = 0; h < np; ++h)
    for (int k = h; k < np; ++k) {
      cxd lhk = 0.0, lkh = 0.0;  // Tr[rho L_h L_k] and Tr[rho L_k L_h]
      for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] <= 0.0) continue;
        for (Eigen::Index j = 0; j < lam.size(); ++j) {
          lhk += lam[i] * l_eig[static_cast<std::size_t>(h)](i, j) * l_eig[static_cast<std::size_t>(k)](j, i);
          lkh += lam[i] * l_eig[static_cast<std::size_t>(k)](i, j) * l_eig[static_cast<std::size_t>(h)](j, i);
        }
      }
      out.h(h, k) = out.h(k, h) = 0.5 * std::real(lhk + lkh);
      const double d = 0.5 * std::real(kImag * (lhk - lkh));
      out.d_raw(h, k) = d;
      out.d_raw(k, h) = -d;
    }
  out.d = kImag * out.d_raw.cast<cxd>();
  return out;
}

CMat rld_fim(const DensityOperator& rho, const std::vector<CMat>& drhos, double rank_eps) {
  const int np = static_cast<int>(drhos.size());
  if (np == 0) throw Error("rld_fim: no derivatives supplied");
  const HermEig eig = herm_eig(rho.mat);
  const double lmax = eig.values.maxCoeff();
  if (eig.values.minCoeff() <= rank_eps * lmax)
    throw Error(
        "rld_fim: state is rank deficient; the RLD does not exist (for pure models use the "
        "D-invariant route rld_pure_d_invariant)");

  CVec inv_lam(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) inv_lam[i] = 1.0 / eig.values[i];
  const CMat rho_inv = eig.vectors * inv_lam.asDiagonal() * eig.vectors.adjoint();

  // J_{h,k} = Tr[R_h^dag rho R_k] = Tr[drho_h rho^{-1} drho_k]
  CMat j(np, np);
  for (int h = 0; h < np; ++h)
    for (int k = 0; k < np; ++k) {
      check_drho(drhos[static_cast<std::size_t>(h)]);
      j(h, k) = (drhos[static_cast<std::size_t>(h)] * rho_inv * drhos[static_cast<std::size_t>(k)]).trace();
    }
  return 0.5 * (j + CMat(j.adjoint()));
}

CMat rld_pure_d_invariant(const RMat& h, const CMat& d) {
  if (h.rows() != h.cols() || d.rows() != h.rows() || d.cols() != h.cols())
    throw Error("rld_pure_d_invariant: dimension mismatch");
  Eigen::FullPivLU<RMat> lu(h);
  if (!lu.isInvertible()) throw Error("rld_pure_d_invariant: singular QFI matrix");
  const RMat h_inv = lu.inverse();
  return h_inv.cast<cxd>() + h_inv.cast<cxd>() * d * h_inv.cast<cxd>();
}

ScalarBounds scalar_bounds(const RVec& weights, const RMat& h, const CMat* j_inv, long m) {
  if (weights.size() != h.rows()) throw Error("scalar_bounds: weight vector length mismatch");
  if (weights.minCoeff() < 0.0) throw Error("scalar_bounds: weights must be nonnegative");
  if (m < 1) throw Error("scalar_bounds: repetition count must be >= 1");
  Eigen::FullPivLU<RMat> lu(h);
  if (!lu.isInvertible()) throw Error("scalar_bounds: singular QFI matrix");
  const RMat h_inv = lu.inverse();

  ScalarBounds out;
  out.sld = (weights.asDiagonal() * h_inv).trace() / static_cast<double>(m);
  if (j_inv) {
    const RMat re = j_inv->real();
    const RMat im = j_inv->imag();
    const RVec sqw = weights.cwiseSqrt();
    const RMat core = sqw.asDiagonal() * im * sqw.asDiagonal();
    out.rld = ((weights.asDiagonal() * re).trace() + trace_norm(core.cast<cxd>())) / static_cast<double>(m);
    out.has_rld = true;
  }
  return out;
}

double extraction_efficiency(const RMat& f, const RMat& h) {
  if (f.rows() != h.rows() || f.cols() != h.cols()) throw Error("extraction_efficiency: dimension mismatch");
  Eigen::FullPivLU<RMat> lu(h);
  if (!lu.isInvertible()) throw Error("extraction_efficiency: singular QFI matrix");
  double u = (f * lu.inverse()).trace();
  const double p = static_cast<double>(f.rows());
  if (u < 0.0 && u > -1e-9) u = 0.0;
  if (u > p && u < p + 1e-9) u = p;
  return u;
}

RMat reparametrize(const RMat& fim, const RMat& b) {
  if (b.cols() != fim.rows()) throw Error("reparametrize: dimension mismatch");
  Eigen::FullPivLU<RMat> lu(b * b.transpose());
  if (!lu.isInvertible()) throw Error("reparametrize: B must have full row rank");
  return b * fim * b.transpose();
}

EffectiveFi effective_fi(const RMat& f) {
  if (f.rows() != 2 || f.cols() != 2) throw Error("effective_fi: 2x2 matrix required");
  if (f(1, 1) <= 0.0 || f(0, 0) <= 0.0) throw Error("effective_fi: zero diagonal entry");
  return {f(0, 0) - f(0, 1) * f(0, 1) / f(1, 1), f(1, 1) - f(0, 1) * f(0, 1) / f(0, 0)};
}

double FisherReport::invariant_violation() const {
  double v = (h - RMat(h.transpose())).cwiseAbs().maxCoeff();
  if (has_f) {
    v = std::max(v, (f - RMat(f.transpose())).cwiseAbs().maxCoeff());
    const RMat gap = h - f;
    const Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (gap + RMat(gap.transpose())));
    v = std::max(v, std::max(0.0, -es.eigenvalues().minCoeff()));
    v = std::max(v, std::max(0.0, -upsilon));
    v = std::max(v, std::max(0.0, upsilon - static_cast<double>(h.rows())));
  }
  return v;
}

FisherReport fisher_report(const DensityOperator& rho, const std::vector<CMat>& drhos,
                           const Povm* povm) {
  FisherReport report;
  const QfimResult q = qfim(rho, drhos);
  report.h = q.h;
  report.d_raw = q.d_raw;
  report.d = q.d;
  report.slds = q.slds;

  if (povm) {
    const RVec probs = outcome_distribution(rho, *povm);
    RMat jac(static_cast<Eigen::Index>(povm->effects.size()), static_cast<Eigen::Index>(drhos.size()));
    for (std::size_t h = 0; h < drhos.size(); ++h)
      for (std::size_t x = 0; x < povm->effects.size(); ++x)
        jac(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(h)) =
            std::real((drhos[h] * povm->effects[x]).trace());
    const FimValue fim = classical_fim(probs, jac);
    if (!fim.divergent) {
      report.f = fim.matrix;
      report.has_f = true;
      report.upsilon = extraction_efficiency(report.f, report.h);
    }
  }

  const HermEig eig = herm_eig(rho.mat);
  const double lmax = eig.values.maxCoeff();
  const bool full_rank = eig.values.minCoeff() > 1e-10 * lmax;
  Eigen::Index large = 0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    if (eig.values[i] > 1e-10 * lmax) ++large;
  if (full_rank) {
    const CMat j = rld_fim(rho, drhos);
    Eigen::FullPivLU<CMat> lu(j);
    if (lu.isInvertible()) {
      report.j_inv = lu.inverse();
      report.has_j = true;
    }
  } else if (large == 1) {  // pure model: D-invariant route
    Eigen::FullPivLU<RMat> lu(report.h);
    if (lu.isInvertible()) {
      report.j_inv = rld_pure_d_invariant(report.h, report.d);
      report.has_j = true;
    }
  }
  return report;
}

}  // namespace qmetro
