#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace qmetro {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cxd kImag{0.0, 1.0};

struct HermEig {
  RVec values;   // ascending
  CMat vectors;  // columns
};

// Eigendecomposition of a Hermitian matrix (symmetrized before solving).
inline HermEig herm_eig(const CMat& a) {
  const CMat h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("herm_eig: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// exp(scale * h) for Hermitian h.  With scale = -i*t this is exactly unitary
// up to eigensolver accuracy, regardless of basis truncation.
inline CMat herm_exp(const CMat& h, cxd scale) {
  const HermEig e = herm_eig(h);
  CVec d(e.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = std::exp(scale * e.values[i]);
  return e.vectors * d.asDiagonal() * e.vectors.adjoint();
}

inline double hermiticity_error(const CMat& a) { return (a - a.adjoint()).cwiseAbs().maxCoeff(); }

inline double unitarity_error(const CMat& u) {
  return (u.adjoint() * u - CMat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

// Trace norm (sum of singular values).
inline double trace_norm(const CMat& a) {
  Eigen::JacobiSVD<CMat> svd(a);
  return svd.singularValues().sum();
}

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMat commutator(const CMat& a, const CMat& b) { return a * b - b * a; }
inline CMat anticommutator(const CMat& a, const CMat& b) { return a * b + b * a; }

}  // namespace qmetro
