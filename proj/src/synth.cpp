#include "fmc/synth.hpp"

#include "fmc/common.hpp"

#include <Eigen/Geometry>

#include <array>
#include <map>
#include <numeric>

namespace fmc {

Mesh make_sphere(int subdivisions) {
  if (subdivisions < 0 || subdivisions > 5) throw ValidationError("sphere subdivisions must lie in [0, 5]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    const auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (const auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int id = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  Mesh mesh;
  mesh.vertices.resize(static_cast<Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<Index>(i)) = verts[i];
  mesh.faces.resize(static_cast<Index>(faces.size()), 3);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int c = 0; c < 3; ++c) mesh.faces(static_cast<Index>(f), c) = faces[f][c];
  }
  return mesh;
}

namespace {

std::vector<int> draw_permutation(int n, std::uint64_t seed) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  if (seed == 0) return perm;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

// Row perm[i] of the result is row i of the input, plus optional jitter.
Eigen::MatrixXd permute_and_jitter(const Eigen::MatrixXd& points, const std::vector<int>& perm, std::uint64_t seed, double noise) {
  if (noise < 0.0) throw ValidationError("noise level must be nonnegative");
  Eigen::MatrixXd out(points.rows(), points.cols());
  for (Index i = 0; i < points.rows(); ++i) out.row(perm[i]) = points.row(i);
  if (noise > 0.0) {
    const double diagonal = (points.colwise().maxCoeff() - points.colwise().minCoeff()).norm();
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (Index i = 0; i < out.rows(); ++i) {
      for (Index c = 0; c < out.cols(); ++c) out(i, c) += noise * diagonal * rng.normal();
    }
  }
  return out;
}

}  // namespace

SyntheticInstance permuted_copy(const Mesh& shape, std::uint64_t seed, double noise) {
  validate(shape);
  SyntheticInstance inst;
  inst.x = shape;
  inst.permutation = draw_permutation(static_cast<int>(shape.vertex_count()), seed);
  inst.y.vertices = permute_and_jitter(shape.vertices, inst.permutation, seed, noise);
  inst.y.faces.resize(shape.face_count(), 3);
  for (Index f = 0; f < shape.face_count(); ++f) {
    for (int c = 0; c < 3; ++c) inst.y.faces(f, c) = inst.permutation[shape.faces(f, c)];
  }
  inst.groundtruth.target = inst.permutation;
  inst.noise = noise;
  return inst;
}

SyntheticCloudInstance permuted_copy(const PointCloud& shape, std::uint64_t seed, double noise) {
  validate(shape);
  SyntheticCloudInstance inst;
  inst.x = shape;
  const auto perm = draw_permutation(static_cast<int>(shape.size()), seed);
  inst.y.points = permute_and_jitter(shape.points, perm, seed, noise);
  inst.groundtruth.target = perm;
  inst.noise = noise;
  return inst;
}

std::vector<int> sample_indices(int n, int q, std::uint64_t seed) {
  if (q < 0 || q > n) throw ValidationError("cannot draw " + std::to_string(q) + " distinct indices from " + std::to_string(n));
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < q; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(q));
  return pool;
}

std::vector<std::pair<int, int>> sample_seed_pairs(const PointwiseMap& groundtruth, int q, std::uint64_t seed) {
  std::vector<std::pair<int, int>> pairs;
  for (int i : sample_indices(static_cast<int>(groundtruth.size()), q, seed)) pairs.emplace_back(i, groundtruth.target[i]);
  return pairs;
}

}  // namespace fmc
