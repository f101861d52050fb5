#pragma once

#include "fmc/funcmap.hpp"
#include "fmc/spectral.hpp"
#include "fmc/types.hpp"

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace fmc {

/// Rows of basis · coeff: the spectral embedding of each vertex.
Eigen::MatrixXd embed_rows(const Spectrum& spectrum, const Eigen::MatrixXd& coeff);

/// Exact nearest-row queries against a fixed point set. Ties resolve to the
/// lowest index. Brute force for small sets, a k-d tree otherwise.
class NearestNeighbors {
 public:
  static constexpr Index kBruteForceLimit = 20000;

  explicit NearestNeighbors(Eigen::MatrixXd points, Index brute_force_limit = kBruteForceLimit);
  ~NearestNeighbors();
  NearestNeighbors(NearestNeighbors&&) noexcept;
  NearestNeighbors& operator=(NearestNeighbors&&) noexcept;

  /// Index of the nearest row to query (a row vector of matching dimension).
  Index query(const Eigen::Ref<const Eigen::RowVectorXd>& query) const;
  Index size() const { return points_.rows(); }

 private:
  struct Tree;
  Eigen::MatrixXd points_;
  std::unique_ptr<Tree> tree_;
};

/// Nearest row of `targets` for every row of `sources`.
std::vector<int> nearest_rows(const Eigen::MatrixXd& sources, const Eigen::MatrixXd& targets);

/// Orthogonal C minimizing Σ ‖source_i − (target C)_i‖² over paired rows.
Eigen::MatrixXd procrustes(const Eigen::MatrixXd& sources, const Eigen::MatrixXd& paired_targets);

/// Orthogonal polar factor U Vᵀ of a square matrix.
Eigen::MatrixXd polar_factor(const Eigen::MatrixXd& m);

struct IcpResult {
  PointwiseMap map;
  Eigen::MatrixXd C;          // final alignment
  int iterations = 0;         // alignment updates performed
  bool converged = false;     // assignments reached a fixed point
  std::vector<double> cost;   // alignment cost after every half-step
};

/// Alternates nearest-row assignment j_i = argmin_j ‖x_i − (Y C)_j‖ with an
/// orthogonal Procrustes update of C until assignments stop changing.
IcpResult icp_refine(const Eigen::MatrixXd& x_embed, const Eigen::MatrixXd& y_embed, const Eigen::MatrixXd& c_init,
                     int max_iters = 100);

/// Point-wise map from a coefficient map: embeddings Φ_k and Ψ_k, C initialized
/// from the polar factor of the solved map.
IcpResult convert_basis_map(const Spectrum& spec_x, const Spectrum& spec_y, const Eigen::MatrixXd& C, int max_iters = 100);

/// Point-wise map from factors: rows of Φ_{k'} B matched against rows of Ψ_{k'} A.
IcpResult convert_factor_pair(const Spectrum& spec_x, const Spectrum& spec_y, const FactorPair& fp, int max_iters = 100);

}  // namespace fmc
