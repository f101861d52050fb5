#pragma once

#include "fmc/optimizer.hpp"
#include "fmc/spectral.hpp"
#include "fmc/types.hpp"

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace fmc {

/// Paired observations: column l of F (on X) should map to column l of G (on Y).
struct CorrespondenceData {
  Eigen::MatrixXd F;  // n × q
  Eigen::MatrixXd G;  // m × q

  Index count() const { return F.cols(); }
  void validate() const;
};

/// Kronecker-delta columns for known point pairs (x_i, y_j).
CorrespondenceData delta_seeds(const std::vector<std::pair<int, int>>& pairs, Index n, Index m);

/// Coefficient map C (k×k) between the leading k basis functions:
/// T = Ψ_k C Φ_kᵀ acting on mass-weighted coefficients.
struct BasisMap {
  Eigen::MatrixXd C;
  bool underdetermined = false;
  double residual = 0.0;  // ‖C F̂ − Ĝ‖_F
};

/// Least-squares C for C Φ_kᵀ M F ≈ Ψ_kᵀ M G; minimum-norm when rank-deficient.
BasisMap solve_baseline(const Spectrum& spec_x, const Spectrum& spec_y, const CorrespondenceData& data, Index k);

/// off(A) = Σ_{i≠j} a_ij².
double off_diagonal_energy(const Eigen::MatrixXd& a);

struct CoupledBases {
  Eigen::MatrixXd P;  // k × k, orthonormal
  Eigen::MatrixXd Q;  // k × k, orthonormal
  double objective = 0.0;
  double initial_objective = 0.0;
  opt::Termination termination = opt::Termination::MaxIters;
  std::vector<opt::TraceEntry> trace;

  /// Diagonal coefficient map in the rotated bases, expressed in the original
  /// ones: C = Q diag(c) Pᵀ with c fitted by least squares.
  Eigen::MatrixXd coefficient_map;
};

/// Coupled-diagonalization objective
/// ‖F̂ᵀP − ĜᵀQ‖² + μ1 off(PᵀΛ_X P) + μ2 off(QᵀΛ_Y Q).
double coupled_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, const Spectrum& spec_x, const Spectrum& spec_y,
                         const CorrespondenceData& data, double mu1, double mu2);

CoupledBases solve_coupled_diag(const Spectrum& spec_x, const Spectrum& spec_y, const CorrespondenceData& data, Index k,
                                double mu1, double mu2, opt::OptimizerOptions options = {});

struct ProblemConfig {
  double mu1 = 1e-8;
  double mu2 = 1e-8;
  double mu3 = 1e-5;
  double mu4 = 1e-8;
  double xi = 1e-3;
  Index k = 40;
  Index k_prime = 60;
  Index block_size = 512;  // columns of T per streamed block in the L1 term

  void validate(Index n, Index m) const;
};

/// Low-rank map in the truncated bases: T = Ψ_{k'} A Bᵀ Φ_{k'}ᵀ.
struct FactorPair {
  Eigen::MatrixXd A;  // k' × k, Y side
  Eigen::MatrixXd B;  // k' × k, X side
};

/// Value of each term of the subspace objective, for inspection and tests.
struct ObjectiveTerms {
  double data = 0.0;
  double smooth_x = 0.0;  // μ1 tr(A Bᵀ Λ_X B Aᵀ)
  double smooth_y = 0.0;  // μ2 tr(B Aᵀ Λ_Y A Bᵀ)
  double sparsity = 0.0;  // μ3 Σ sqrt(T² + ξ)
  double norm = 0.0;      // μ4/2 (‖A‖² + ‖B‖²)
  double total() const { return data + smooth_x + smooth_y + sparsity + norm; }
};

/// The subspace matrix-completion problem over the factors (A, B). Holds the
/// projected data F̂ = Φᵀ M F, Ĝ = Ψᵀ M G; the L1 term streams column blocks
/// of T and never forms the full m×n matrix.
class SubspaceProblem {
 public:
  SubspaceProblem(const Spectrum& spec_x, const Spectrum& spec_y, const CorrespondenceData& data, const ProblemConfig& config);

  const ProblemConfig& config() const { return config_; }
  ObjectiveTerms terms(const FactorPair& fp) const;
  double objective(const FactorPair& fp) const { return terms(fp).total(); }
  /// Objective and its gradient (∂A, ∂B) in one pass.
  double evaluate(const FactorPair& fp, FactorPair* gradient) const;
  FactorPair gradient(const FactorPair& fp) const;

  const Eigen::MatrixXd& projected_f() const { return f_hat_; }
  const Eigen::MatrixXd& projected_g() const { return g_hat_; }

 private:
  void check_shape(const FactorPair& fp) const;
  // Σ sqrt(T²+ξ) and, when requested, W = S V and Z = Sᵀ U with S = T/sqrt(T²+ξ).
  double stream_l1(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, Eigen::MatrixXd* su, Eigen::MatrixXd* stv) const;

  Eigen::MatrixXd phi_;  // n × k'
  Eigen::MatrixXd psi_;  // m × k'
  Eigen::VectorXd lambda_x_;
  Eigen::VectorXd lambda_y_;
  Eigen::MatrixXd f_hat_;
  Eigen::MatrixXd g_hat_;
  ProblemConfig config_;
};

/// Map given in kernel form T = U Vᵀ (U: m×r on Y, V: n×r on X).
struct LowRankMap {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
};

/// Factors from the top-k singular triplets of a map, with singular vectors
/// taken in the mass-weighted inner products: A = Ψᵀ M_Y Ũ Σ^{1/2},
/// B = Φᵀ M_X Ṽ Σ^{1/2}. Missing rank is padded with zero columns.
FactorPair init_from_map(const LowRankMap& map, const Spectrum& spec_x, const Spectrum& spec_y, Index k);
/// Same, for a coefficient map C (k_c × k_c, k_c <= k') between the leading basis functions.
FactorPair init_from_coefficients(const Eigen::MatrixXd& C, Index k_prime, Index k);
/// Same, for a point-wise map x_i -> y_{target[i]} projected into the bases.
FactorPair init_from_pointwise(const PointwiseMap& map, const Spectrum& spec_x, const Spectrum& spec_y, Index k);

struct SubspaceResult {
  FactorPair factors;
  double objective = 0.0;
  double initial_objective = 0.0;
  opt::Termination termination = opt::Termination::MaxIters;
  std::vector<opt::TraceEntry> trace;
};

SubspaceResult solve_subspace(const SubspaceProblem& problem, const FactorPair& init, const opt::OptimizerOptions& options = {});

}  // namespace fmc
