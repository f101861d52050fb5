#include "fmc/spectral.hpp"

#include "fmc/common.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fmc {

Spectrum Spectrum::truncated(Index k) const {
  if (k < 1 || k > rank()) throw ValidationError("cannot truncate a rank-" + std::to_string(rank()) + " spectrum to " + std::to_string(k));
  return {basis.leftCols(k), eigenvalues.head(k), mass};
}

void fix_signs(Eigen::MatrixXd& basis) {
  for (Index c = 0; c < basis.cols(); ++c) {
    const double peak = basis.col(c).cwiseAbs().maxCoeff();
    for (Index r = 0; r < basis.rows(); ++r) {
      if (std::abs(basis(r, c)) > 1e-8 * peak) {
        if (basis(r, c) < 0.0) basis.col(c) *= -1.0;
        break;
      }
    }
  }
}

namespace {

void check_inputs(const Laplacian& lap, Index k_prime) {
  const Index n = lap.size();
  if (lap.stiffness.order() != n) throw ValidationError("stiffness and mass sizes differ");
  if (k_prime < 1) throw ValidationError("k' must be at least 1");
  if (k_prime > n) throw ValidationError("k' = " + std::to_string(k_prime) + " exceeds the vertex count " + std::to_string(n));
  if ((lap.mass.array() <= 0.0).any()) throw ValidationError("mass entries must be positive");
}

// Maps mass-orthonormalized eigenvectors of M^{-1/2} K M^{-1/2} back to the
// generalized problem.
Spectrum finish(Eigen::MatrixXd vectors, Eigen::VectorXd values, const Eigen::VectorXd& mass) {
  const Eigen::VectorXd inv_sqrt = mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd basis = inv_sqrt.asDiagonal() * vectors;
  fix_signs(basis);
  return {std::move(basis), std::move(values), mass};
}

Spectrum eigensolve_dense(const Laplacian& lap, Index k_prime) {
  const Eigen::VectorXd inv_sqrt = lap.mass.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd sym = inv_sqrt.asDiagonal() * lap.stiffness.dense() * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  return finish(solver.eigenvectors().leftCols(k_prime), solver.eigenvalues().head(k_prime), lap.mass);
}

Eigen::MatrixXd random_block(Index rows, Index cols, unsigned seed) {
  Rng rng(seed);
  Eigen::MatrixXd out(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) out(r, c) = rng.normal();
  }
  return out;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& block) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(block);
  return qr.householderQ() * Eigen::MatrixXd::Identity(block.rows(), block.cols());
}

// Shift-invert block subspace iteration with Rayleigh-Ritz on the symmetric
// operator S = M^{-1/2} K M^{-1/2}. The block is wider than k' so that the
// wanted eigenvalues converge at rate λ_i / λ_{p+1}, degenerate clusters included.
Spectrum eigensolve_iterative(const Laplacian& lap, Index k_prime, const EigensolveOptions& options) {
  const Index n = lap.size();
  const Index block = std::min<Index>(n, std::max<Index>(2 * k_prime, k_prime + 10));
  const Eigen::VectorXd sqrt_mass = lap.mass.cwiseSqrt();
  const Eigen::VectorXd inv_sqrt = sqrt_mass.cwiseInverse();
  const SparseMatrix& stiffness = lap.stiffness.matrix();

  // Gershgorin bound of S, used to scale the shift and the residual test.
  double norm_bound = 0.0;
  for (Index c = 0; c < stiffness.outerSize(); ++c) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(stiffness, c); it; ++it) row += std::abs(it.value()) * inv_sqrt(it.row());
    norm_bound = std::max(norm_bound, row * inv_sqrt(c));
  }
  if (norm_bound == 0.0) norm_bound = 1.0;
  const double shift = 1e-8 * norm_bound;

  SparseMatrix shifted = stiffness;
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift * lap.mass(i);
  Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
  if (factor.info() != Eigen::Success) throw NumericalError("factorization of the shifted stiffness failed");

  const auto apply_s = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return inv_sqrt.asDiagonal() * (stiffness * (inv_sqrt.asDiagonal() * x));
  };

  Eigen::MatrixXd x = orthonormalize(random_block(n, block, options.seed));
  Eigen::VectorXd values;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd rhs = sqrt_mass.asDiagonal() * x;
    const Eigen::MatrixXd solved = factor.solve(rhs);
    const Eigen::MatrixXd q = orthonormalize(sqrt_mass.asDiagonal() * solved);
    const Eigen::MatrixXd sq = apply_s(q);
    Eigen::MatrixXd projected = q.transpose() * sq;
    projected = 0.5 * (projected + projected.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(projected);
    x = q * ritz.eigenvectors();
    values = ritz.eigenvalues();

    const Eigen::MatrixXd residual = sq * ritz.eigenvectors().leftCols(k_prime) - x.leftCols(k_prime) * values.head(k_prime).asDiagonal();
    if (residual.colwise().norm().maxCoeff() <= options.tolerance * norm_bound) {
      return finish(x.leftCols(k_prime), values.head(k_prime), lap.mass);
    }
  }
  throw NumericalError("eigensolver did not converge after " + std::to_string(options.max_iterations) + " iterations");
}

}  // namespace

Spectrum eigensolve(const Laplacian& lap, Index k_prime, const EigensolveOptions& options) {
  check_inputs(lap, k_prime);
  const bool dense = options.method == EigenMethod::Dense ||
                     (options.method == EigenMethod::Auto && lap.size() <= options.dense_threshold);
  return dense ? eigensolve_dense(lap, k_prime) : eigensolve_iterative(lap, k_prime, options);
}

Eigen::MatrixXd analyze(const Spectrum& spectrum, const Eigen::MatrixXd& functions) {
  if (functions.rows() != spectrum.size()) {
    throw ValidationError("function length " + std::to_string(functions.rows()) + " does not match basis size " + std::to_string(spectrum.size()));
  }
  return spectrum.basis.transpose() * (spectrum.mass.asDiagonal() * functions);
}

Eigen::MatrixXd synthesize(const Spectrum& spectrum, const Eigen::MatrixXd& coefficients) {
  if (coefficients.rows() != spectrum.rank()) {
    throw ValidationError("coefficient length " + std::to_string(coefficients.rows()) + " does not match basis rank " + std::to_string(spectrum.rank()));
  }
  return spectrum.basis * coefficients;
}

}  // namespace fmc
