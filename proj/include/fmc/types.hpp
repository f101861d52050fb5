#pragma once

#include <Eigen/Core>

#include <vector>

namespace fmc {

using Index = Eigen::Index;

/// Triangle mesh: n×3 vertex positions and f×3 vertex indices.
struct Mesh {
  Eigen::MatrixXd vertices;
  Eigen::MatrixXi faces;

  Index vertex_count() const { return vertices.rows(); }
  Index face_count() const { return faces.rows(); }
};

/// Points in R^d, one per row.
struct PointCloud {
  Eigen::MatrixXd points;

  Index size() const { return points.rows(); }
  Index dimension() const { return points.cols(); }
};

/// Total map from source vertices to target vertices: target[i] is the image of i.
struct PointwiseMap {
  std::vector<int> target;

  Index size() const { return static_cast<Index>(target.size()); }
  friend bool operator==(const PointwiseMap&, const PointwiseMap&) = default;
};

/// Fraction of points with error at most rho, for ascending rho.
struct ErrorCurve {
  std::vector<double> rho;
  std::vector<double> fraction;
};

// Throws ValidationError if the structure breaks its invariants.
void validate(const Mesh& mesh);
void validate(const PointCloud& cloud);
void validate(const PointwiseMap& map, Index target_count);

}  // namespace fmc
