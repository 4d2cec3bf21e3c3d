// SPDX-License-Identifier: Apache-2.0
#include "mmrc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace mmrc {

namespace {

void checkFinite(const MatrixXcd& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string("non-finite entries in ") + what);
}

// Minimum-norm W = B A^+ through a thin SVD of A. Exact but O(min^2 max);
// reserved for small problems and as the rank-deficient fallback.
MatrixXcd solveViaSvd(const MatrixXcd& B, const MatrixXcd& A, double relTol) {
  Eigen::BDCSVD<MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  double cutoff = s.size() > 0 ? s(0) * relTol : 0.0;
  Eigen::VectorXd sinv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff && s(i) > 0.0) sinv(i) = 1.0 / s(i);
  // A^+ = V S^+ U^H, so W = (B V) S^+ U^H.
  return (B * svd.matrixV()) * sinv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

MatrixXcd solveRightLS(const MatrixXcd& B, const MatrixXcd& A, const LSOptions& opts) {
  if (B.cols() != A.cols()) throw std::invalid_argument("solveRightLS: B and A column mismatch");
  if (opts.ridge < 0.0) throw std::invalid_argument("solveRightLS: negative ridge");
  checkFinite(B, "B");
  checkFinite(A, "A");
  const Eigen::Index H = A.rows(), P = A.cols();

  if (opts.ridge > 0.0) {
    // Push-through identity: B A^H (A A^H + lI)^-1 == B (A^H A + lI)^-1 A^H.
    // Factor whichever Gram matrix is smaller.
    if (H <= P) {
      MatrixXcd G = A * A.adjoint();
      G.diagonal().array() += opts.ridge;
      return G.llt().solve((B * A.adjoint()).adjoint()).adjoint();
    }
    MatrixXcd G = A.adjoint() * A;
    G.diagonal().array() += opts.ridge;
    return (G.llt().solve(B.adjoint())).adjoint() * A.adjoint();
  }

  if (opts.force_svd || std::max(H, P) <= 192) return solveViaSvd(B, A, opts.rank_tolerance);

  // Fast path: Cholesky on the smaller Gram matrix. Falls back to the SVD
  // route when the Gram factor looks rank-deficient.
  if (H <= P) {
    MatrixXcd G = A * A.adjoint();
    Eigen::LLT<MatrixXcd> llt(G);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.matrixLLT().diagonal().real();
      double dmax = d.maxCoeff(), dmin = d.minCoeff();
      if (dmin > 0.0 && dmin / dmax > 1e-7) {
        return llt.solve((B * A.adjoint()).adjoint()).adjoint();
      }
    }
  } else {
    MatrixXcd G = A.adjoint() * A;
    Eigen::LLT<MatrixXcd> llt(G);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.matrixLLT().diagonal().real();
      double dmax = d.maxCoeff(), dmin = d.minCoeff();
      if (dmin > 0.0 && dmin / dmax > 1e-7) {
        return llt.solve(B.adjoint()).adjoint() * A.adjoint();
      }
    }
  }
  return solveViaSvd(B, A, opts.rank_tolerance);
}

double spectralRadius(const MatrixXcd& W) {
  if (W.rows() != W.cols()) throw std::invalid_argument("spectralRadius: non-square input");
  if (W.size() == 0) throw std::invalid_argument("spectralRadius: empty matrix");
  if (W.isZero(0.0)) return 0.0;
  Eigen::ComplexEigenSolver<MatrixXcd> es(W, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXcd scaleToSpectralRadius(const MatrixXcd& W, double rho) {
  double sr = spectralRadius(W);
  if (sr <= 0.0) throw std::invalid_argument("scaleToSpectralRadius: zero spectral radius");
  return W * (rho / sr);
}

}  // namespace mmrc
