#pragma once

#include "fmc/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace fmc {

/// Unit icosphere: the icosahedron subdivided `subdivisions` times (at most 5),
/// 10·4^s + 2 vertices.
Mesh make_sphere(int subdivisions);

/// Y is a vertex-permuted (and optionally jittered) copy of X with exact groundtruth.
struct SyntheticInstance {
  Mesh x;
  Mesh y;
  PointwiseMap groundtruth;     // x_i corresponds to y_{groundtruth.target[i]}
  std::vector<int> permutation; // same as groundtruth.target
  double noise = 0.0;           // jitter std-dev as a fraction of the bounding-box diagonal
};

/// Seed 0 keeps the identity permutation; any other seed draws a
/// Fisher-Yates permutation. Jitter is Gaussian with standard deviation
/// noise · (bounding-box diagonal).
SyntheticInstance permuted_copy(const Mesh& shape, std::uint64_t seed, double noise);

struct SyntheticCloudInstance {
  PointCloud x;
  PointCloud y;
  PointwiseMap groundtruth;
  double noise = 0.0;
};
SyntheticCloudInstance permuted_copy(const PointCloud& shape, std::uint64_t seed, double noise);

/// q distinct source vertices drawn with `seed`, paired with their groundtruth targets.
std::vector<std::pair<int, int>> sample_seed_pairs(const PointwiseMap& groundtruth, int q, std::uint64_t seed);

/// q distinct indices in [0, n), in draw order.
std::vector<int> sample_indices(int n, int q, std::uint64_t seed);

}  // namespace fmc
