#pragma once

#include "fmc/laplacian.hpp"

#include <Eigen/Core>

namespace fmc {

/// First k' generalized eigenpairs (stiffness φ = λ mass φ), ascending.
/// Columns are mass-orthonormal: basisᵀ · diag(mass) · basis = I.
struct Spectrum {
  Eigen::MatrixXd basis;        // n × k'
  Eigen::VectorXd eigenvalues;  // k'
  Eigen::VectorXd mass;         // n

  Index size() const { return basis.rows(); }
  Index rank() const { return basis.cols(); }

  /// Leading k columns/eigenvalues.
  Spectrum truncated(Index k) const;
};

enum class EigenMethod { Auto, Dense, Iterative };

struct EigensolveOptions {
  EigenMethod method = EigenMethod::Auto;
  Index dense_threshold = 500;  // Auto uses the dense solver up to this size
  double tolerance = 1e-10;     // relative residual for the iterative solver
  int max_iterations = 1000;
  unsigned seed = 1;            // start block of the iterative solver
};

Spectrum eigensolve(const Laplacian& lap, Index k_prime, const EigensolveOptions& options = {});

/// Flips each column so its first significant entry is positive.
void fix_signs(Eigen::MatrixXd& basis);

// Fourier analysis α = Φᵀ M f and synthesis f = Φ α. Matrix arguments act column-wise.
Eigen::MatrixXd analyze(const Spectrum& spectrum, const Eigen::MatrixXd& functions);
Eigen::MatrixXd synthesize(const Spectrum& spectrum, const Eigen::MatrixXd& coefficients);

}  // namespace fmc
