#include "evolal/admm.hpp"

#include "evolal/error.hpp"

#include <algorithm>
#include <cmath>

namespace evolal {

namespace {

constexpr double kBalance = 10.0;
constexpr double kRhoMin = 1e-2;
constexpr double kRhoMax = 1e2;

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Prox of lambda*|offdiag|_1 over the block-Toeplitz subspace. Entries tied
// together share one value: the soft-thresholded group mean.
Matrix project_l1(const Matrix& a, const AdmmOptions& opt, double rho) {
  const auto d = a.rows();
  const double thresh = opt.lambda / rho;
  Matrix z(d, d);
  // Each tied group is averaged together with its mirror image, so the
  // result is exactly symmetric.
  if (!opt.toeplitz || opt.block_size >= d) {
    for (Eigen::Index j = 0; j < d; ++j) {
      z(j, j) = a(j, j);
      for (Eigen::Index i = 0; i < j; ++i) z(i, j) = z(j, i) = soft_threshold(0.5 * (a(i, j) + a(j, i)), thresh);
    }
    return z;
  }
  const int m = opt.block_size;
  const auto blocks = static_cast<int>(d / m);
  for (int offset = 0; offset < blocks; ++offset) {
    const int count = blocks - offset;
    for (int p = 0; p < m; ++p)
      for (int q = offset == 0 ? p : 0; q < m; ++q) {
        // Entries (r*m+p, (r+offset)*m+q) and their transposes.
        double sum = 0.0;
        for (int r = 0; r < count; ++r) {
          const int c = r + offset;
          sum += a(r * m + p, c * m + q) + a(c * m + q, r * m + p);
        }
        const double mean = sum / (2.0 * count);
        const bool diagonal = offset == 0 && p == q;
        const double v = diagonal ? mean : soft_threshold(mean, thresh);
        for (int r = 0; r < count; ++r) {
          const int c = r + offset;
          z(r * m + p, c * m + q) = v;
          z(c * m + q, r * m + p) = v;
        }
      }
  }
  return z;
}

}  // namespace

AdmmResult solve_toeplitz_glasso(const Matrix& s, const AdmmOptions& opt) {
  const auto d = s.rows();
  if (s.cols() != d || d == 0) throw ShapeError("covariance must be square and nonempty");
  if (opt.block_size <= 0 || d % opt.block_size != 0)
    throw ParameterError("covariance dimension must be a multiple of the block size");
  if (opt.lambda < 0.0 || opt.rho <= 0.0 || opt.tol <= 0.0) throw ParameterError("invalid ADMM options");

  Matrix theta = Matrix::Identity(d, d);
  Matrix z = theta;
  Matrix u = Matrix::Zero(d, d);
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  AdmmResult res;
  double rho = opt.rho;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Matrix target = rho * (z - u) - s;
    target = 0.5 * (target + target.transpose());
    eig.compute(target);
    const Vector& lam = eig.eigenvalues();
    Vector diag(d);
    for (Eigen::Index i = 0; i < d; ++i) diag[i] = (lam[i] + std::sqrt(lam[i] * lam[i] + 4.0 * rho)) / (2.0 * rho);
    theta = eig.eigenvectors() * diag.asDiagonal() * eig.eigenvectors().transpose();
    theta = 0.5 * (theta + theta.transpose());

    Matrix z_old = z;
    z = project_l1(theta + u, opt, rho);
    u += theta - z;

    res.primal_residual = (theta - z).norm();
    res.dual_residual = rho * (z - z_old).norm();
    res.iterations = it;
    const double step = (z - z_old).norm();
    if (res.primal_residual < opt.tol && res.dual_residual < opt.tol && step < opt.tol) {
      Eigen::LLT<Matrix> llt(z);
      if (llt.info() == Eigen::Success) {
        res.precision = std::move(z);
        return res;
      }
    }
    // Residual balancing; u is the scaled dual, so it rescales with rho.
    if (res.primal_residual > kBalance * res.dual_residual && rho < kRhoMax) {
      rho *= 2.0;
      u /= 2.0;
    } else if (res.dual_residual > kBalance * res.primal_residual && rho > kRhoMin) {
      rho /= 2.0;
      u *= 2.0;
    }
  }
  throw ConvergenceError("ADMM did not converge to a positive definite precision matrix", res.primal_residual,
                         res.dual_residual);
}

double toeplitz_violation(const Matrix& a, int m) {
  const auto blocks = a.rows() / m;
  double worst = 0.0;
  for (Eigen::Index r = 0; r + 1 < blocks; ++r)
    for (Eigen::Index c = 0; c + 1 < blocks; ++c) {
      const double dev = (a.block(r * m, c * m, m, m) - a.block((r + 1) * m, (c + 1) * m, m, m)).cwiseAbs().maxCoeff();
      worst = std::max(worst, dev);
    }
  return worst;
}

}  // namespace evolal
