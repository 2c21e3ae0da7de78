#pragma once

#include "evolal/core.hpp"

namespace evolal {

struct AdmmOptions {
  double lambda = 1e-3;    // off-diagonal l1 weight
  int block_size = 1;      // m: block edge length
  bool toeplitz = true;    // tie blocks along each block diagonal
  double tol = 1e-4;       // bound on primal residual, dual residual and step (Frobenius)
  int max_iter = 5000;
  double rho = 1.0;        // initial penalty; adapted by residual balancing
};

struct AdmmResult {
  Matrix precision;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Sparse block-Toeplitz inverse covariance estimate:
///
///   argmin  -logdet(T) + tr(S T) + lambda * sum_{i != j} |T_ij|
///   s.t.    T symmetric PD, block (r, c) a function of r - c only.
///
/// ADMM splits T (log-det term, solved by eigendecomposition) from Z
/// (l1 + Toeplitz tie, solved by soft-thresholding group means). The returned
/// matrix is Z, so zero patterns and Toeplitz ties are exact. Throws
/// ConvergenceError when the iteration cap is hit or Z is not PD.
AdmmResult solve_toeplitz_glasso(const Matrix& covariance, const AdmmOptions& options);

// Largest deviation between block (r, c) and block (r+1, c+1).
double toeplitz_violation(const Matrix& m, int block_size);

}  // namespace evolal
