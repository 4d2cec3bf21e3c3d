// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace mmrc {

using Eigen::MatrixXcd;

struct LSOptions {
  double ridge = 0.0;            // lambda; 0 means plain least squares
  double rank_tolerance = 1e-12; // singular-value cutoff relative to the largest
  bool force_svd = false;        // bypass the fast normal-equation path
};

/// Minimizes ||B - W A||_F (+ ridge * ||W||_F^2 when ridge > 0) over W.
/// B is M x P, A is H x P, result is M x H. For ridge = 0 this is the
/// minimum-norm (Moore-Penrose) solution with the given rank cutoff.
MatrixXcd solveRightLS(const MatrixXcd& B, const MatrixXcd& A, const LSOptions& opts = {});

/// Largest eigenvalue modulus of a square matrix.
double spectralRadius(const MatrixXcd& W);

/// W * (rho / spectralRadius(W)); throws on a zero matrix.
MatrixXcd scaleToSpectralRadius(const MatrixXcd& W, double rho);

}  // namespace mmrc
