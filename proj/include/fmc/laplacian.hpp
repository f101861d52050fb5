#pragma once

#include "fmc/types.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string_view>
#include <utility>
#include <vector>

namespace fmc {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Undirected edge {first, second} with first < second.
using Edge = std::pair<int, int>;
/// Sorted, duplicate-free list of undirected edges.
using EdgeSet = std::vector<Edge>;

struct Triplet {
  int row;
  int col;
  double value;
};

/// Symmetric sparse matrix. Both triangles are stored in `matrix`; explicit
/// zeros are dropped on construction.
class SparseSym {
 public:
  SparseSym() = default;
  /// Builds from upper-triangle entries (row <= col). Duplicates are summed.
  SparseSym(Index order, const std::vector<Triplet>& upper);

  Index order() const { return matrix_.rows(); }
  const SparseMatrix& matrix() const { return matrix_; }
  double coeff(Index i, Index j) const { return matrix_.coeff(i, j); }
  /// Upper-triangle entries in column-major order.
  std::vector<Triplet> upper_triplets() const;
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }

 private:
  SparseMatrix matrix_;
};

enum class LaplacianKind { GraphUnnormalized, GraphRandomWalk, MeshCotangent };

std::string_view to_string(LaplacianKind kind);
LaplacianKind laplacian_kind_from_string(std::string_view name);

/// L = mass^{-1} · stiffness, with stiffness = D − W.
struct Laplacian {
  SparseSym stiffness;
  Eigen::VectorXd mass;
  LaplacianKind kind = LaplacianKind::GraphUnnormalized;

  Index size() const { return mass.size(); }
};

/// Symmetrized K-nearest-neighbour graph: {i,j} is an edge iff j is among the
/// K nearest of i or i among the K nearest of j. Ties go to the lower index.
EdgeSet build_knn_graph(const PointCloud& cloud, int k);

/// Distance from each point to its `rank`-th nearest other point.
Eigen::VectorXd kth_neighbor_distance(const PointCloud& cloud, int rank);

struct SigmaMode {
  enum class Kind { Fixed, SelfTuning };
  Kind kind = Kind::SelfTuning;
  double sigma = 1.0;   // Fixed only
  int neighbor = 7;     // SelfTuning: scale is the distance to this neighbour

  static SigmaMode fixed(double s) { return {Kind::Fixed, s, 7}; }
  static SigmaMode self_tuning(int neighbor = 7) { return {Kind::SelfTuning, 0.0, neighbor}; }
};

/// Gaussian edge weights. Fixed: exp(-d²/(2σ²)). Self-tuning:
/// exp(-d²/(σ_i σ_j)) with σ_i the distance to the configured neighbour.
SparseSym gaussian_weights(const PointCloud& cloud, const EdgeSet& edges, const SigmaMode& mode);

enum class GraphNormalization { Unnormalized, RandomWalk };

Laplacian graph_laplacian(const SparseSym& weights, GraphNormalization normalization);

/// Cotangent stiffness with lumped (one third of incident area) mass.
Laplacian cotan_laplacian(const Mesh& mesh);

/// Unique undirected edges of a triangle mesh.
EdgeSet mesh_edges(const Mesh& mesh);

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c);

}  // namespace fmc
