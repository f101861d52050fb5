#include "fmc/evaluation.hpp"

#include "fmc/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace fmc {

EdgeGraph edge_graph(const Eigen::MatrixXd& positions, const EdgeSet& edges) {
  EdgeGraph g;
  g.adjacency.resize(static_cast<std::size_t>(positions.rows()));
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= positions.rows() || b >= positions.rows()) throw ValidationError("edge index out of range");
    const double len = (positions.row(a) - positions.row(b)).norm();
    g.adjacency[a].push_back({b, len});
    g.adjacency[b].push_back({a, len});
  }
  return g;
}

EdgeGraph edge_graph(const Mesh& mesh) { return edge_graph(mesh.vertices, mesh_edges(mesh)); }
EdgeGraph edge_graph(const PointCloud& cloud, const EdgeSet& edges) { return edge_graph(cloud.points, edges); }

Eigen::VectorXd shortest_paths(const EdgeGraph& graph, int source) {
  const Index n = graph.size();
  if (source < 0 || source >= n) throw ValidationError("geodesic source " + std::to_string(source) + " out of range");
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist(source) = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist(v)) continue;
    for (const auto& arc : graph.adjacency[v]) {
      const double nd = d + arc.length;
      if (nd < dist(arc.to)) {
        dist(arc.to) = nd;
        heap.emplace(nd, arc.to);
      }
    }
  }
  return dist;
}

GeodesicTable::GeodesicTable(const EdgeGraph& graph, const std::vector<int>& sources, const Eigen::VectorXd& mass)
    : vertex_count_(graph.size()) {
  if (mass.size() != graph.size()) throw ValidationError("mass vector does not match the graph size");
  if ((mass.array() <= 0.0).any()) throw ValidationError("mass entries must be positive");
  normalization_ = std::sqrt(mass.sum());
  slot_.assign(static_cast<std::size_t>(graph.size()), -1);
  std::vector<int> unique;
  for (int s : sources) {
    if (s < 0 || s >= graph.size()) throw ValidationError("geodesic source " + std::to_string(s) + " out of range");
    if (slot_[s] == -1) {
      slot_[s] = static_cast<int>(unique.size());
      unique.push_back(s);
    }
  }
  rows_.resize(unique.size());
  parallel_for(unique.size(), [&](std::size_t r) { rows_[r] = shortest_paths(graph, unique[r]); });
  bool disconnected = false;
  for (const auto& r : rows_) disconnected = disconnected || !r.allFinite();
  if (disconnected) warn("target shape is disconnected; unreachable distances are +inf and excluded from curves");
}

bool GeodesicTable::has_source(int source) const {
  return source >= 0 && source < vertex_count_ && slot_[source] != -1;
}

const Eigen::VectorXd& GeodesicTable::row(int source) const {
  if (!has_source(source)) throw ValidationError("missing geodesic row for vertex " + std::to_string(source));
  return rows_[slot_[source]];
}

std::vector<double> hard_error(const PointwiseMap& predicted, const PointwiseMap& truth, const GeodesicTable& geo) {
  if (predicted.size() != truth.size()) throw ValidationError("predicted and true maps cover different source sets");
  validate(predicted, geo.size());
  validate(truth, geo.size());
  std::vector<double> out(predicted.target.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = geo.row(truth.target[i])(predicted.target[i]) / geo.normalization();
  }
  return out;
}

std::vector<double> hard_error(const PointwiseMap& predicted, const PointwiseMap& truth, const PointwiseMap& symmetry,
                               const GeodesicTable& geo) {
  auto out = hard_error(predicted, truth, geo);
  validate(symmetry, geo.size());
  if (symmetry.size() != geo.size()) throw ValidationError("symmetry map must cover every target vertex");
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int mirrored = symmetry.target[truth.target[i]];
    out[i] = std::min(out[i], geo.row(mirrored)(predicted.target[i]) / geo.normalization());
  }
  return out;
}

namespace {

// Returns Σ_j d_j |t_j| and Σ_j |t_j| over the nonzero entries of t.
std::pair<double, double> weighted_distance(const Eigen::Ref<const Eigen::VectorXd>& column, int true_target,
                                            const GeodesicTable& geo) {
  if (column.size() != geo.size()) throw ValidationError("column length does not match the target shape");
  const Eigen::VectorXd& d = geo.row(true_target);
  double num = 0.0, den = 0.0;
  for (Index j = 0; j < column.size(); ++j) {
    const double w = std::abs(column(j));
    if (w == 0.0) continue;
    num += d(j) * w;
    den += w;
  }
  if (den == 0.0) throw ValidationError("soft error of an all-zero column is undefined");
  return {num, den};
}

}  // namespace

double soft_error(const Eigen::Ref<const Eigen::VectorXd>& column, int true_target, const GeodesicTable& geo) {
  const auto [num, den] = weighted_distance(column, true_target, geo);
  return num / (geo.normalization() * den);
}

double spread(const Eigen::Ref<const Eigen::VectorXd>& column, int true_target, const GeodesicTable& geo) {
  const auto [num, den] = weighted_distance(column, true_target, geo);
  return num / den;
}

Eigen::VectorXd map_column(const FactorPair& fp, const Spectrum& spec_x, const Spectrum& spec_y, int source) {
  const Index k_prime = fp.A.rows();
  if (fp.B.rows() != k_prime || k_prime > spec_x.rank() || k_prime > spec_y.rank()) throw ValidationError("factor shapes do not match the spectra");
  if (source < 0 || source >= spec_x.size()) throw ValidationError("source index out of range");
  const Eigen::VectorXd coeff = fp.B.transpose() * spec_x.basis.row(source).head(k_prime).transpose();
  return spec_y.basis.leftCols(k_prime) * (fp.A * coeff);
}

Eigen::VectorXd map_column(const Eigen::MatrixXd& C, const Spectrum& spec_x, const Spectrum& spec_y, int source) {
  const Index k = C.rows();
  if (C.cols() != k || k > spec_x.rank() || k > spec_y.rank()) throw ValidationError("coefficient map does not match the spectra");
  if (source < 0 || source >= spec_x.size()) throw ValidationError("source index out of range");
  return spec_y.basis.leftCols(k) * (C * spec_x.basis.row(source).head(k).transpose());
}

std::vector<double> soft_errors(const FactorPair& fp, const Spectrum& spec_x, const Spectrum& spec_y,
                                const std::vector<int>& sources, const PointwiseMap& truth, const GeodesicTable& geo) {
  std::vector<double> out(sources.size());
  parallel_for(sources.size(), [&](std::size_t s) {
    out[s] = soft_error(map_column(fp, spec_x, spec_y, sources[s]), truth.target.at(sources[s]), geo);
  });
  return out;
}

std::vector<double> soft_errors(const Eigen::MatrixXd& C, const Spectrum& spec_x, const Spectrum& spec_y,
                                const std::vector<int>& sources, const PointwiseMap& truth, const GeodesicTable& geo) {
  std::vector<double> out(sources.size());
  parallel_for(sources.size(), [&](std::size_t s) {
    out[s] = soft_error(map_column(C, spec_x, spec_y, sources[s]), truth.target.at(sources[s]), geo);
  });
  return out;
}

std::vector<double> default_thresholds() {
  std::vector<double> rho(100);
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = 0.25 * static_cast<double>(i) / 99.0;
  return rho;
}

CurveResult error_curve(const std::vector<double>& errors, const std::vector<double>& thresholds) {
  if (errors.empty()) throw ValidationError("error list is empty");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) throw ValidationError("thresholds must be ascending");
  std::vector<double> finite;
  finite.reserve(errors.size());
  for (double e : errors) {
    if (std::isfinite(e)) finite.push_back(e);
  }
  CurveResult out;
  out.excluded = static_cast<Index>(errors.size() - finite.size());
  if (out.excluded > 0) warn(std::to_string(out.excluded) + " non-finite errors excluded from the curve");
  if (finite.empty()) throw ValidationError("no finite errors to aggregate");
  std::sort(finite.begin(), finite.end());
  out.curve.rho = thresholds;
  out.curve.fraction.reserve(thresholds.size());
  for (double rho : thresholds) {
    const auto count = std::upper_bound(finite.begin(), finite.end(), rho) - finite.begin();
    out.curve.fraction.push_back(static_cast<double>(count) / static_cast<double>(finite.size()));
  }
  return out;
}

}  // namespace fmc
