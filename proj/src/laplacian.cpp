#include "fmc/laplacian.hpp"

#include "fmc/common.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace fmc {

SparseSym::SparseSym(Index order, const std::vector<Triplet>& upper) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * upper.size());
  for (const auto& t : upper) {
    if (t.row < 0 || t.col >= order || t.row > t.col) {
      throw ValidationError("sparse entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                            ") is not in the upper triangle of an order-" + std::to_string(order) + " matrix");
    }
    entries.emplace_back(t.row, t.col, t.value);
    if (t.row != t.col) entries.emplace_back(t.col, t.row, t.value);
  }
  matrix_.resize(order, order);
  matrix_.setFromTriplets(entries.begin(), entries.end());
  matrix_.prune(0.0);
  matrix_.makeCompressed();
}

std::vector<Triplet> SparseSym::upper_triplets() const {
  std::vector<Triplet> out;
  for (Index c = 0; c < matrix_.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(matrix_, c); it; ++it) {
      if (it.row() <= it.col()) out.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
    }
  }
  return out;
}

std::string_view to_string(LaplacianKind kind) {
  switch (kind) {
    case LaplacianKind::GraphUnnormalized: return "graph-unnorm";
    case LaplacianKind::GraphRandomWalk: return "graph-rw";
    case LaplacianKind::MeshCotangent: return "cotan";
  }
  return "unknown";
}

LaplacianKind laplacian_kind_from_string(std::string_view name) {
  if (name == "graph-unnorm") return LaplacianKind::GraphUnnormalized;
  if (name == "graph-rw") return LaplacianKind::GraphRandomWalk;
  if (name == "cotan") return LaplacianKind::MeshCotangent;
  throw ValidationError("unknown Laplacian kind '" + std::string(name) + "'");
}

namespace {

// Indices of the other points sorted by (distance, index).
std::vector<int> neighbors_by_distance(const PointCloud& cloud, Index i, Eigen::VectorXd& dist2) {
  const Index n = cloud.size();
  dist2 = (cloud.points.rowwise() - cloud.points.row(i)).rowwise().squaredNorm();
  std::vector<int> order;
  order.reserve(n - 1);
  for (Index j = 0; j < n; ++j) {
    if (j != i) order.push_back(static_cast<int>(j));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist2(a) < dist2(b); });
  return order;
}

}  // namespace

EdgeSet build_knn_graph(const PointCloud& cloud, int k) {
  validate(cloud);
  const Index n = cloud.size();
  if (k < 1) throw ValidationError("K must be at least 1");
  if (k >= n) throw ValidationError("K = " + std::to_string(k) + " must be smaller than the point count " + std::to_string(n));
  EdgeSet edges;
  edges.reserve(static_cast<std::size_t>(n) * k);
  Eigen::VectorXd dist2;
  for (Index i = 0; i < n; ++i) {
    const auto order = neighbors_by_distance(cloud, i, dist2);
    for (int r = 0; r < k; ++r) {
      const int j = order[r];
      edges.emplace_back(std::min<int>(i, j), std::max<int>(i, j));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

Eigen::VectorXd kth_neighbor_distance(const PointCloud& cloud, int rank) {
  validate(cloud);
  const Index n = cloud.size();
  if (rank < 1) throw ValidationError("neighbour rank must be at least 1");
  const int r = static_cast<int>(std::min<Index>(rank, n - 1));
  Eigen::VectorXd out(n);
  Eigen::VectorXd dist2;
  for (Index i = 0; i < n; ++i) {
    const auto order = neighbors_by_distance(cloud, i, dist2);
    out(i) = std::sqrt(dist2(order[r - 1]));
  }
  return out;
}

SparseSym gaussian_weights(const PointCloud& cloud, const EdgeSet& edges, const SigmaMode& mode) {
  validate(cloud);
  const Index n = cloud.size();
  Eigen::VectorXd scale;
  if (mode.kind == SigmaMode::Kind::Fixed) {
    if (!(mode.sigma > 0.0)) throw ValidationError("sigma must be positive");
  } else {
    scale = kth_neighbor_distance(cloud, mode.neighbor);
  }
  std::vector<Triplet> upper;
  upper.reserve(edges.size());
  for (const auto& [i, j] : edges) {
    if (i < 0 || j >= n || i >= j) throw ValidationError("invalid edge {" + std::to_string(i) + "," + std::to_string(j) + "}");
    const double d2 = (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
    double w = 1.0;
    if (d2 > 0.0) {
      if (mode.kind == SigmaMode::Kind::Fixed) {
        w = std::exp(-d2 / (2.0 * mode.sigma * mode.sigma));
      } else {
        const double s = scale(i) * scale(j);
        if (!(s > 0.0)) throw ValidationError("self-tuning scale is zero at edge {" + std::to_string(i) + "," + std::to_string(j) + "}");
        w = std::exp(-d2 / s);
      }
    }
    upper.push_back({i, j, w});
  }
  return SparseSym(n, upper);
}

Laplacian graph_laplacian(const SparseSym& weights, GraphNormalization normalization) {
  const Index n = weights.order();
  const SparseMatrix& w = weights.matrix();
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  std::vector<Triplet> upper;
  for (Index c = 0; c < w.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(w, c); it; ++it) {
      if (it.row() == it.col()) continue;
      if (it.value() < 0.0) throw ValidationError("graph weights must be nonnegative");
      degree(c) += it.value();
      if (it.row() < it.col()) upper.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), -it.value()});
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (degree(i) != 0.0) upper.push_back({static_cast<int>(i), static_cast<int>(i), degree(i)});
  }

  Laplacian lap;
  lap.stiffness = SparseSym(n, upper);
  if (normalization == GraphNormalization::RandomWalk) {
    for (Index i = 0; i < n; ++i) {
      if (!(degree(i) > 0.0)) throw ValidationError("isolated vertex " + std::to_string(i) + " under random-walk normalization");
    }
    lap.mass = degree;
    lap.kind = LaplacianKind::GraphRandomWalk;
  } else {
    lap.mass = Eigen::VectorXd::Ones(n);
    lap.kind = LaplacianKind::GraphUnnormalized;
  }
  return lap;
}

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

EdgeSet mesh_edges(const Mesh& mesh) {
  EdgeSet edges;
  edges.reserve(3 * mesh.face_count());
  for (Index f = 0; f < mesh.face_count(); ++f) {
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.faces(f, e), b = mesh.faces(f, (e + 1) % 3);
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

Laplacian cotan_laplacian(const Mesh& mesh) {
  validate(mesh);
  const Index n = mesh.vertex_count();
  std::map<Edge, double> weight;
  std::map<Edge, int> incidence;
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);

  for (Index f = 0; f < mesh.face_count(); ++f) {
    const int idx[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
    const Eigen::Vector3d p[3] = {mesh.vertices.row(idx[0]), mesh.vertices.row(idx[1]), mesh.vertices.row(idx[2])};
    const double twice_area = (p[1] - p[0]).cross(p[2] - p[0]).norm();
    const double scale = std::max({(p[1] - p[0]).squaredNorm(), (p[2] - p[1]).squaredNorm(), (p[0] - p[2]).squaredNorm()});
    if (!(twice_area > 1e-14 * scale)) throw ValidationError("zero-area face " + std::to_string(f));
    for (int c = 0; c < 3; ++c) mass(idx[c]) += twice_area / 6.0;

    // The corner c faces the edge between the other two vertices.
    for (int c = 0; c < 3; ++c) {
      const int a = idx[(c + 1) % 3], b = idx[(c + 2) % 3];
      const Eigen::Vector3d u = p[(c + 1) % 3] - p[c];
      const Eigen::Vector3d v = p[(c + 2) % 3] - p[c];
      const double cot = u.dot(v) / u.cross(v).norm();
      const Edge e{std::min(a, b), std::max(a, b)};
      weight[e] += 0.5 * cot;
      if (++incidence[e] > 2) {
        throw ValidationError("edge {" + std::to_string(e.first) + "," + std::to_string(e.second) + "} is shared by more than two faces");
      }
    }
  }

  Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(n);
  std::vector<Triplet> upper;
  upper.reserve(weight.size() + n);
  for (const auto& [e, w] : weight) {
    upper.push_back({e.first, e.second, -w});
    diagonal(e.first) += w;
    diagonal(e.second) += w;
  }
  for (Index i = 0; i < n; ++i) {
    if (mass(i) == 0.0) throw ValidationError("vertex " + std::to_string(i) + " is not referenced by any face");
    upper.push_back({static_cast<int>(i), static_cast<int>(i), diagonal(i)});
  }

  Laplacian lap;
  lap.stiffness = SparseSym(n, upper);
  lap.mass = std::move(mass);
  lap.kind = LaplacianKind::MeshCotangent;
  return lap;
}

}  // namespace fmc
