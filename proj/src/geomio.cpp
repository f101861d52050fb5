#include "fmc/geomio.hpp"

#include "fmc/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fmc {

void validate(const Mesh& mesh) {
  const Index n = mesh.vertex_count();
  if (mesh.vertices.cols() != 3) throw ValidationError("mesh vertices must be 3-vectors");
  if (mesh.faces.cols() != 3) throw ValidationError("mesh faces must be triangles");
  if (mesh.face_count() == 0) throw ValidationError("mesh has no faces");
  if (!mesh.vertices.allFinite()) throw ValidationError("mesh has non-finite vertex coordinates");
  for (Index f = 0; f < mesh.face_count(); ++f) {
    const int a = mesh.faces(f, 0), b = mesh.faces(f, 1), c = mesh.faces(f, 2);
    for (int v : {a, b, c}) {
      if (v < 0 || v >= n) {
        throw ValidationError("face " + std::to_string(f) + " index " + std::to_string(v) + " out of range");
      }
    }
    if (a == b || b == c || a == c) throw ValidationError("degenerate face " + std::to_string(f));
  }
}

void validate(const PointCloud& cloud) {
  if (cloud.size() < 2) throw ValidationError("point cloud needs at least 2 points");
  if (cloud.dimension() < 1) throw ValidationError("point cloud dimension must be >= 1");
  if (!cloud.points.allFinite()) throw ValidationError("point cloud has non-finite coordinates");
}

void validate(const PointwiseMap& map, Index target_count) {
  for (std::size_t i = 0; i < map.target.size(); ++i) {
    if (map.target[i] < 0 || map.target[i] >= target_count) {
      throw ValidationError("map target " + std::to_string(map.target[i]) + " of source " +
                            std::to_string(i) + " out of range");
    }
  }
}

namespace io {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

double parse_double(std::string_view token, std::size_t line) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ValidationError("parse error at line " + std::to_string(line) + ": bad number '" +
                          std::string(token) + "'");
  }
  if (std::isnan(v)) throw ValidationError("NaN entry at line " + std::to_string(line));
  if (!std::isfinite(v)) throw ValidationError("non-finite entry at line " + std::to_string(line));
  return v;
}

long long parse_int(std::string_view token, std::size_t line) {
  token = trim(token);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ValidationError("parse error at line " + std::to_string(line) + ": bad integer '" +
                          std::string(token) + "'");
  }
  return v;
}

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  if (pos + sizeof(U) > in.size()) throw ValidationError("truncated payload");
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    bits |= static_cast<U>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  }
  pos += sizeof(U);
  return std::bit_cast<T>(bits);
}

// Lines with content, skipping blanks and '#' comments, tagged with 1-based numbers.
struct NumberedLine {
  std::size_t number;
  std::vector<std::string_view> tokens;
};

std::vector<NumberedLine> content_lines(std::string_view text) {
  std::vector<NumberedLine> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tokens = split_ws(line);
    if (!tokens.empty()) out.push_back({i + 1, std::move(tokens)});
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

Mesh load_mesh(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = content_lines(text);
  if (lines.empty() || lines[0].tokens[0] != "OFF") {
    throw ValidationError("parse error at line " + std::to_string(lines.empty() ? 1 : lines[0].number) +
                          ": missing OFF header");
  }
  std::size_t cursor = 0;
  std::vector<std::string_view> counts(lines[0].tokens.begin() + 1, lines[0].tokens.end());
  std::size_t counts_line = lines[0].number;
  if (counts.empty()) {
    if (lines.size() < 2) throw ValidationError("parse error at line " + std::to_string(lines[0].number) + ": missing counts");
    counts = lines[1].tokens;
    counts_line = lines[1].number;
    cursor = 2;
  } else {
    cursor = 1;
  }
  if (counts.size() < 2) throw ValidationError("parse error at line " + std::to_string(counts_line) + ": bad counts");
  const long long nv = parse_int(counts[0], counts_line);
  const long long nf = parse_int(counts[1], counts_line);
  if (nv < 0 || nf < 0) throw ValidationError("parse error at line " + std::to_string(counts_line) + ": negative counts");
  if (lines.size() < cursor + static_cast<std::size_t>(nv + nf)) {
    throw ValidationError("parse error: file ends before " + std::to_string(nv) + " vertices and " +
                          std::to_string(nf) + " faces");
  }

  Mesh mesh;
  mesh.vertices.resize(nv, 3);
  for (long long v = 0; v < nv; ++v, ++cursor) {
    const auto& line = lines[cursor];
    if (line.tokens.size() < 3) throw ValidationError("parse error at line " + std::to_string(line.number) + ": vertex needs 3 coordinates");
    for (int c = 0; c < 3; ++c) mesh.vertices(v, c) = parse_double(line.tokens[c], line.number);
  }
  mesh.faces.resize(nf, 3);
  for (long long f = 0; f < nf; ++f, ++cursor) {
    const auto& line = lines[cursor];
    const long long arity = parse_int(line.tokens[0], line.number);
    if (arity != 3) throw ValidationError("non-triangle face at line " + std::to_string(line.number));
    if (line.tokens.size() < 4) throw ValidationError("parse error at line " + std::to_string(line.number) + ": face needs 3 indices");
    for (int c = 0; c < 3; ++c) {
      const long long idx = parse_int(line.tokens[1 + c], line.number);
      if (idx < 0 || idx >= nv) {
        throw ValidationError("index out of range at line " + std::to_string(line.number) + ": " + std::to_string(idx));
      }
      mesh.faces(f, c) = static_cast<int>(idx);
    }
    if (mesh.faces(f, 0) == mesh.faces(f, 1) || mesh.faces(f, 1) == mesh.faces(f, 2) || mesh.faces(f, 0) == mesh.faces(f, 2)) {
      throw ValidationError("degenerate face at line " + std::to_string(line.number));
    }
  }
  validate(mesh);
  return mesh;
}

void save_mesh(const Mesh& mesh, const fs::path& path) {
  validate(mesh);
  std::string out = "OFF\n" + std::to_string(mesh.vertex_count()) + " " + std::to_string(mesh.face_count()) + " 0\n";
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    out += format_double(mesh.vertices(v, 0)) + " " + format_double(mesh.vertices(v, 1)) + " " +
           format_double(mesh.vertices(v, 2)) + "\n";
  }
  for (Index f = 0; f < mesh.face_count(); ++f) {
    out += "3 " + std::to_string(mesh.faces(f, 0)) + " " + std::to_string(mesh.faces(f, 1)) + " " +
           std::to_string(mesh.faces(f, 2)) + "\n";
  }
  write_file(path, out);
}

PointCloud load_point_cloud(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = content_lines(text);
  if (lines.empty()) throw ValidationError("empty point cloud " + path.string());
  const std::size_t d = lines[0].tokens.size();
  PointCloud cloud;
  cloud.points.resize(static_cast<Index>(lines.size()), static_cast<Index>(d));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].tokens.size() != d) {
      throw ValidationError("parse error at line " + std::to_string(lines[i].number) + ": expected " +
                            std::to_string(d) + " coordinates");
    }
    for (std::size_t c = 0; c < d; ++c) cloud.points(i, c) = parse_double(lines[i].tokens[c], lines[i].number);
  }
  validate(cloud);
  return cloud;
}

void save_point_cloud(const PointCloud& cloud, const fs::path& path) {
  validate(cloud);
  std::string out;
  for (Index i = 0; i < cloud.size(); ++i) {
    for (Index c = 0; c < cloud.dimension(); ++c) {
      if (c) out += ' ';
      out += format_double(cloud.points(i, c));
    }
    out += '\n';
  }
  write_file(path, out);
}

std::string encode_fmc1(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw ValidationError("matrix has non-finite entries");
  std::string out = "FMC1";
  out.reserve(12 + 8 * static_cast<std::size_t>(m.size()));
  put_le(out, static_cast<std::uint32_t>(m.rows()));
  put_le(out, static_cast<std::uint32_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) put_le(out, m(r, c));
  }
  return out;
}

Eigen::MatrixXd decode_fmc1(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "FMC1") != 0) throw ValidationError("magic mismatch: expected FMC1");
  std::size_t pos = 4;
  if (bytes.size() < 12) throw ValidationError("truncated header");
  const auto rows = get_le<std::uint32_t>(bytes, pos);
  const auto cols = get_le<std::uint32_t>(bytes, pos);
  const std::uint64_t need = 12 + 8ull * rows * cols;
  if (bytes.size() < need) throw ValidationError("truncated payload: expected " + std::to_string(need) + " bytes, got " + std::to_string(bytes.size()));
  if (bytes.size() > need) throw ValidationError("trailing bytes after FMC1 payload");
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      const double v = get_le<double>(bytes, pos);
      if (std::isnan(v)) throw ValidationError("NaN entry at (" + std::to_string(r) + "," + std::to_string(c) + ")");
      if (!std::isfinite(v)) throw ValidationError("non-finite entry at (" + std::to_string(r) + "," + std::to_string(c) + ")");
      m(r, c) = v;
    }
  }
  return m;
}

Eigen::MatrixXd load_matrix(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 4 && bytes.compare(0, 4, "FMC1") == 0) return decode_fmc1(bytes);
  for (std::size_t i = 0; i < std::min<std::size_t>(4, bytes.size()); ++i) {
    const auto c = static_cast<unsigned char>(bytes[i]);
    if (c < 0x09 || c > 0x7e || (i == 0 && c == 'F')) throw ValidationError("magic mismatch: expected FMC1 or CSV in " + path.string());
  }

  std::vector<std::vector<double>> rows;
  const auto lines = split_lines(bytes);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(parse_double(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start), i + 1));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ValidationError("ragged CSV row at line " + std::to_string(i + 1) + ": expected " +
                            std::to_string(rows.front().size()) + " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void save_matrix(const Eigen::MatrixXd& m, const fs::path& path) { write_file(path, encode_fmc1(m)); }

void save_matrix_csv(const Eigen::MatrixXd& m, const fs::path& path) {
  if (!m.allFinite()) throw ValidationError("matrix has non-finite entries");
  std::string out;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  write_file(path, out);
}

std::vector<double> load_vector_csv(const fs::path& path) {
  const Eigen::MatrixXd m = load_matrix(path);
  if (m.cols() > 1 && m.rows() > 1) throw ValidationError("expected a single column in " + path.string());
  return std::vector<double>(m.data(), m.data() + m.size());
}

void save_vector_csv(const std::vector<double>& values, const fs::path& path) {
  std::string out;
  for (double v : values) out += format_double(v) + "\n";
  write_file(path, out);
}

std::vector<std::pair<int, int>> load_pairs(const fs::path& path) {
  std::vector<std::pair<int, int>> pairs;
  const auto text = read_file(path);
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ValidationError("parse error at line " + std::to_string(i + 1) + ": expected 'src,dst'");
    const auto a = parse_int(line.substr(0, comma), i + 1);
    const auto b = parse_int(line.substr(comma + 1), i + 1);
    if (a < 0 || b < 0) throw ValidationError("negative index at line " + std::to_string(i + 1));
    pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  return pairs;
}

void save_pairs(const std::vector<std::pair<int, int>>& pairs, const fs::path& path) {
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(pairs[i].first) + "," + std::to_string(pairs[i].second);
  }
  write_file(path, out);
}

PointwiseMap load_pointwise_map(const fs::path& path) {
  const auto pairs = load_pairs(path);
  PointwiseMap map;
  map.target.assign(pairs.size(), -1);
  for (const auto& [src, dst] : pairs) {
    if (static_cast<std::size_t>(src) >= pairs.size()) throw ValidationError("map source " + std::to_string(src) + " out of range");
    if (map.target[src] != -1) throw ValidationError("map source " + std::to_string(src) + " assigned twice");
    map.target[src] = dst;
  }
  return map;
}

void save_pointwise_map(const PointwiseMap& map, const fs::path& path) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(map.target.size());
  for (std::size_t i = 0; i < map.target.size(); ++i) pairs.emplace_back(static_cast<int>(i), map.target[i]);
  save_pairs(pairs, path);
}

std::string curve_to_json(const ErrorCurve& curve) {
  if (curve.rho.size() != curve.fraction.size()) throw ValidationError("curve rho/fraction length mismatch");
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < curve.rho.size(); ++i) {
    arr.push_back({{"rho", curve.rho[i]}, {"fraction", curve.fraction[i]}});
  }
  return arr.dump();
}

ErrorCurve curve_from_json(const std::string& text) {
  ErrorCurve curve;
  try {
    const auto arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw ValidationError("curve JSON must be an array");
    for (const auto& point : arr) {
      curve.rho.push_back(point.at("rho").get<double>());
      curve.fraction.push_back(point.at("fraction").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad curve JSON: ") + e.what());
  }
  return curve;
}

void save_curve(const ErrorCurve& curve, const fs::path& path) { write_file(path, curve_to_json(curve)); }
ErrorCurve load_curve(const fs::path& path) { return curve_from_json(read_file(path)); }

void save_laplacian(const Laplacian& lap, const fs::path& path) {
  const auto upper = lap.stiffness.upper_triplets();
  std::string out = "FMS1";
  put_le(out, static_cast<std::uint32_t>(lap.size()));
  put_le(out, static_cast<std::uint64_t>(upper.size()));
  for (const auto& t : upper) {
    put_le(out, static_cast<std::uint32_t>(t.row));
    put_le(out, static_cast<std::uint32_t>(t.col));
    put_le(out, t.value);
  }
  for (Index i = 0; i < lap.size(); ++i) put_le(out, lap.mass(i));
  write_file(path, out);
}

Laplacian load_laplacian(const fs::path& path, LaplacianKind kind) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 4 || bytes.compare(0, 4, "FMS1") != 0) throw ValidationError("magic mismatch: expected FMS1");
  std::size_t pos = 4;
  const auto n = get_le<std::uint32_t>(bytes, pos);
  const auto nnz = get_le<std::uint64_t>(bytes, pos);
  if (bytes.size() != pos + nnz * 16 + 8ull * n) throw ValidationError("truncated payload in " + path.string());
  std::vector<Triplet> upper;
  upper.reserve(nnz);
  for (std::uint64_t e = 0; e < nnz; ++e) {
    const auto i = get_le<std::uint32_t>(bytes, pos);
    const auto j = get_le<std::uint32_t>(bytes, pos);
    const double v = get_le<double>(bytes, pos);
    if (i > j || j >= n) throw ValidationError("bad sparse entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
    if (!std::isfinite(v)) throw ValidationError("non-finite sparse entry");
    upper.push_back({static_cast<int>(i), static_cast<int>(j), v});
  }
  Laplacian lap;
  lap.kind = kind;
  lap.stiffness = SparseSym(n, upper);
  lap.mass.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    lap.mass(i) = get_le<double>(bytes, pos);
    if (!(lap.mass(i) > 0.0) || !std::isfinite(lap.mass(i))) throw ValidationError("mass entries must be positive");
  }
  return lap;
}

}  // namespace io
}  // namespace fmc
