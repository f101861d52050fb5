#pragma once

#include "fmc/laplacian.hpp"
#include "fmc/types.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace fmc::io {

namespace fs = std::filesystem;

// Meshes: ASCII OFF, triangles only.
Mesh load_mesh(const fs::path& path);
void save_mesh(const Mesh& mesh, const fs::path& path);

// Point clouds: one point per line, whitespace separated, uniform arity.
PointCloud load_point_cloud(const fs::path& path);
void save_point_cloud(const PointCloud& cloud, const fs::path& path);

/// Loads a dense matrix. Files starting with the "FMC1" magic are read as
/// binary (u32 rows, u32 cols, row-major little-endian f64); anything else is
/// parsed as header-free CSV with uniform row length.
Eigen::MatrixXd load_matrix(const fs::path& path);
void save_matrix(const Eigen::MatrixXd& m, const fs::path& path);      // FMC1
void save_matrix_csv(const Eigen::MatrixXd& m, const fs::path& path);  // 17 significant digits

// In-memory FMC1 codec, used by the file functions above.
std::string encode_fmc1(const Eigen::MatrixXd& m);
Eigen::MatrixXd decode_fmc1(const std::string& bytes);

// Plain column vectors as one value per line.
std::vector<double> load_vector_csv(const fs::path& path);
void save_vector_csv(const std::vector<double>& values, const fs::path& path);

// Maps: "src,dst" per line, no header. Also used for seed lists.
PointwiseMap load_pointwise_map(const fs::path& path);
void save_pointwise_map(const PointwiseMap& map, const fs::path& path);
std::vector<std::pair<int, int>> load_pairs(const fs::path& path);
void save_pairs(const std::vector<std::pair<int, int>>& pairs, const fs::path& path);

// Curves: JSON array of {"rho": .., "fraction": ..}.
std::string curve_to_json(const ErrorCurve& curve);
ErrorCurve curve_from_json(const std::string& text);
void save_curve(const ErrorCurve& curve, const fs::path& path);
ErrorCurve load_curve(const fs::path& path);

/// Laplacian as "FMS1", u32 n, u64 nnz, nnz × (u32 i, u32 j, f64 v) for the
/// upper triangle (i <= j), then n f64 mass entries. The kind is not part of
/// the format; callers keep it alongside.
void save_laplacian(const Laplacian& lap, const fs::path& path);
Laplacian load_laplacian(const fs::path& path, LaplacianKind kind);

// Formats a double with 17 significant digits (lossless).
std::string format_double(double v);

}  // namespace fmc::io
