#pragma once

#include "fmc/funcmap.hpp"
#include "fmc/laplacian.hpp"
#include "fmc/spectral.hpp"
#include "fmc/types.hpp"

#include <Eigen/Core>

#include <vector>

namespace fmc {

/// Weighted undirected graph in adjacency-list form.
struct EdgeGraph {
  struct Arc {
    int to;
    double length;
  };
  std::vector<std::vector<Arc>> adjacency;

  Index size() const { return static_cast<Index>(adjacency.size()); }
};

/// Edge graph with Euclidean edge lengths.
EdgeGraph edge_graph(const Mesh& mesh);
EdgeGraph edge_graph(const PointCloud& cloud, const EdgeSet& edges);
EdgeGraph edge_graph(const Eigen::MatrixXd& positions, const EdgeSet& edges);

/// Single-source shortest-path distances (Dijkstra); unreachable vertices get +inf.
Eigen::VectorXd shortest_paths(const EdgeGraph& graph, int source);

/// Geodesic distances from a set of sources plus the length normalization
/// sqrt(Σ_j a_j) of the target shape.
class GeodesicTable {
 public:
  GeodesicTable(const EdgeGraph& graph, const std::vector<int>& sources, const Eigen::VectorXd& mass);

  bool has_source(int source) const;
  /// Distances from `source`; throws if no row was computed for it.
  const Eigen::VectorXd& row(int source) const;
  double normalization() const { return normalization_; }
  Index size() const { return vertex_count_; }

 private:
  std::vector<int> slot_;  // vertex -> row index or -1
  std::vector<Eigen::VectorXd> rows_;
  double normalization_ = 1.0;
  Index vertex_count_ = 0;
};

/// Per-point geodesic error d_Y(y_{j_i}, y_{j'_i}) / sqrt(Σ a_j) of a predicted
/// map against the truth. Needs geodesic rows for every true target.
std::vector<double> hard_error(const PointwiseMap& predicted, const PointwiseMap& truth, const GeodesicTable& geo);

/// Same, also accepting the symmetric image symmetry[j'_i] of the true target;
/// needs geodesic rows for the mirrored targets too.
std::vector<double> hard_error(const PointwiseMap& predicted, const PointwiseMap& truth, const PointwiseMap& symmetry,
                               const GeodesicTable& geo);

/// |t|-weighted mean geodesic distance from the true target, normalized.
double soft_error(const Eigen::Ref<const Eigen::VectorXd>& column, int true_target, const GeodesicTable& geo);

/// Same weighting without the normalization: Σ_j d(y_*, y_j)|t_j| / Σ_j |t_j|.
double spread(const Eigen::Ref<const Eigen::VectorXd>& column, int true_target, const GeodesicTable& geo);

/// Soft errors of the columns t_i = T δ_i for the listed sources, generated one
/// at a time from the factors (T = Ψ A Bᵀ Φᵀ) or a coefficient map (T = Ψ_k C Φ_kᵀ).
std::vector<double> soft_errors(const FactorPair& fp, const Spectrum& spec_x, const Spectrum& spec_y,
                                const std::vector<int>& sources, const PointwiseMap& truth, const GeodesicTable& geo);
std::vector<double> soft_errors(const Eigen::MatrixXd& C, const Spectrum& spec_x, const Spectrum& spec_y,
                                const std::vector<int>& sources, const PointwiseMap& truth, const GeodesicTable& geo);

/// Columns T δ_i for a factor pair or coefficient map.
Eigen::VectorXd map_column(const FactorPair& fp, const Spectrum& spec_x, const Spectrum& spec_y, int source);
Eigen::VectorXd map_column(const Eigen::MatrixXd& C, const Spectrum& spec_x, const Spectrum& spec_y, int source);

/// 100 uniform thresholds on [0, 0.25].
std::vector<double> default_thresholds();

struct CurveResult {
  ErrorCurve curve;
  Index excluded = 0;  // non-finite errors left out
};

/// Fraction of finite errors that are <= each threshold; thresholds must ascend.
CurveResult error_curve(const std::vector<double>& errors, const std::vector<double>& thresholds);

}  // namespace fmc
