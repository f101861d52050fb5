#include "fmc/pointwise.hpp"

#include "fmc/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <numeric>

namespace fmc {

Eigen::MatrixXd embed_rows(const Spectrum& spectrum, const Eigen::MatrixXd& coeff) {
  if (coeff.rows() < 1 || coeff.rows() > spectrum.rank()) {
    throw ValidationError("coefficient matrix has " + std::to_string(coeff.rows()) + " rows; basis has " + std::to_string(spectrum.rank()) + " columns");
  }
  return spectrum.basis.leftCols(coeff.rows()) * coeff;
}

struct NearestNeighbors::Tree {
  struct Node {
    Index begin, end;   // range into order
    int dim = -1;       // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
  };
  std::vector<Index> order;
  std::vector<Node> nodes;
  static constexpr Index kLeafSize = 16;

  int build(const Eigen::MatrixXd& pts, Index begin, Index end) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;
    int best_dim = 0;
    double best_spread = -1.0;
    for (Index d = 0; d < pts.cols(); ++d) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (Index i = begin; i < end; ++i) {
        lo = std::min(lo, pts(order[i], d));
        hi = std::max(hi, pts(order[i], d));
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = static_cast<int>(d);
      }
    }
    if (best_spread <= 0.0) return id;
    const Index mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                     [&](Index a, Index b) { return pts(a, best_dim) < pts(b, best_dim); });
    nodes[id].dim = best_dim;
    nodes[id].split = pts(order[mid], best_dim);
    const int left = build(pts, begin, mid);
    const int right = build(pts, mid, end);
    nodes[id].left = left;
    nodes[id].right = right;
    return id;
  }

  void search(const Eigen::MatrixXd& pts, const Eigen::Ref<const Eigen::RowVectorXd>& q, int id, double& best_d,
              Index& best_i) const {
    const Node& node = nodes[id];
    if (node.dim < 0) {
      for (Index k = node.begin; k < node.end; ++k) {
        const Index i = order[k];
        const double d = (pts.row(i) - q).squaredNorm();
        if (d < best_d || (d == best_d && i < best_i)) {
          best_d = d;
          best_i = i;
        }
      }
      return;
    }
    const double diff = q(node.dim) - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(pts, q, near, best_d, best_i);
    if (diff * diff <= best_d) search(pts, q, far, best_d, best_i);
  }
};

NearestNeighbors::NearestNeighbors(Eigen::MatrixXd points, Index brute_force_limit) : points_(std::move(points)) {
  if (points_.rows() == 0) throw ValidationError("nearest-neighbour search over an empty point set");
  if (points_.rows() > brute_force_limit) {
    tree_ = std::make_unique<Tree>();
    tree_->order.resize(points_.rows());
    std::iota(tree_->order.begin(), tree_->order.end(), Index{0});
    tree_->build(points_, 0, points_.rows());
  }
}

NearestNeighbors::~NearestNeighbors() = default;
NearestNeighbors::NearestNeighbors(NearestNeighbors&&) noexcept = default;
NearestNeighbors& NearestNeighbors::operator=(NearestNeighbors&&) noexcept = default;

Index NearestNeighbors::query(const Eigen::Ref<const Eigen::RowVectorXd>& q) const {
  if (q.size() != points_.cols()) throw ValidationError("query dimension mismatch");
  double best_d = std::numeric_limits<double>::infinity();
  Index best_i = 0;
  if (tree_) {
    best_i = points_.rows();
    tree_->search(points_, q, 0, best_d, best_i);
    return best_i;
  }
  for (Index j = 0; j < points_.rows(); ++j) {
    const double d = (points_.row(j) - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_i = j;
    }
  }
  return best_i;
}

std::vector<int> nearest_rows(const Eigen::MatrixXd& sources, const Eigen::MatrixXd& targets) {
  if (sources.cols() != targets.cols()) throw ValidationError("embedding dimensions differ");
  const NearestNeighbors index(targets);
  std::vector<int> out(static_cast<std::size_t>(sources.rows()));
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(index.query(sources.row(static_cast<Index>(i)))); });
  return out;
}

Eigen::MatrixXd polar_factor(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd procrustes(const Eigen::MatrixXd& sources, const Eigen::MatrixXd& paired_targets) {
  // max_C tr(Cᵀ Yᵀ X) over orthogonal C is attained at the polar factor of Yᵀ X.
  return polar_factor(paired_targets.transpose() * sources);
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

double alignment_cost(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& c, const std::vector<int>& assignment) {
  return (x - gather_rows(y, assignment) * c).squaredNorm();
}

}  // namespace

IcpResult icp_refine(const Eigen::MatrixXd& x_embed, const Eigen::MatrixXd& y_embed, const Eigen::MatrixXd& c_init, int max_iters) {
  const Index k = x_embed.cols();
  if (k == 0) throw ValidationError("embedding dimension must be positive");
  if (x_embed.rows() == 0 || y_embed.rows() == 0) throw ValidationError("empty embedding");
  if (y_embed.cols() != k || c_init.rows() != k || c_init.cols() != k) throw ValidationError("embedding dimensions differ");

  IcpResult out;
  out.C = c_init;
  std::vector<int> assignment = nearest_rows(x_embed, y_embed * out.C);
  out.cost.push_back(alignment_cost(x_embed, y_embed, out.C, assignment));
  for (int iter = 0; iter < max_iters; ++iter) {
    out.C = procrustes(x_embed, gather_rows(y_embed, assignment));
    out.cost.push_back(alignment_cost(x_embed, y_embed, out.C, assignment));
    ++out.iterations;
    auto next = nearest_rows(x_embed, y_embed * out.C);
    out.cost.push_back(alignment_cost(x_embed, y_embed, out.C, next));
    if (next == assignment) {
      out.converged = true;
      break;
    }
    assignment = std::move(next);
  }
  out.map.target = std::move(assignment);
  return out;
}

IcpResult convert_basis_map(const Spectrum& spec_x, const Spectrum& spec_y, const Eigen::MatrixXd& C, int max_iters) {
  const Index k = C.rows();
  if (C.cols() != k) throw ValidationError("coefficient map must be square");
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(k, k);
  return icp_refine(embed_rows(spec_x, identity), embed_rows(spec_y, identity), polar_factor(C), max_iters);
}

IcpResult convert_factor_pair(const Spectrum& spec_x, const Spectrum& spec_y, const FactorPair& fp, int max_iters) {
  if (fp.A.rows() != fp.B.rows() || fp.A.cols() != fp.B.cols()) throw ValidationError("factor shapes differ");
  const Index k = fp.A.cols();
  // T depends on A Bᵀ only; rebalance the factors so both embeddings share a scale.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fp.A * fp.B.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd root = svd.singularValues().head(k).cwiseSqrt();
  const Eigen::MatrixXd a = svd.matrixU().leftCols(k) * root.asDiagonal();
  const Eigen::MatrixXd b = svd.matrixV().leftCols(k) * root.asDiagonal();
  return icp_refine(embed_rows(spec_x, b), embed_rows(spec_y, a), Eigen::MatrixXd::Identity(k, k), max_iters);
}

}  // namespace fmc
