#include "fmc/laplacian.hpp"
#include "fmc/pointwise.hpp"
#include "fmc/synth.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Geometry>
#include <Eigen/QR>

#include <cmath>
#include <numeric>

using namespace fmc;

namespace {

Eigen::MatrixXd random_orthogonal(Rng& rng, Index k) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(test::random_matrix(rng, k, k));
  return qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
}

std::vector<int> brute_nearest(const Eigen::MatrixXd& s, const Eigen::MatrixXd& t) {
  std::vector<int> out(s.rows());
  for (Index i = 0; i < s.rows(); ++i) {
    double best = INFINITY;
    for (Index j = 0; j < t.rows(); ++j) {
      const double d = (s.row(i) - t.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        out[i] = static_cast<int>(j);
      }
    }
  }
  return out;
}

std::vector<int> iota(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("embed_rows") {
  Spectrum s{Eigen::MatrixXd::Random(10, 4), Eigen::VectorXd::LinSpaced(4, 0, 3), Eigen::VectorXd::Ones(10)};
  CHECK(embed_rows(s, Eigen::MatrixXd::Identity(4, 4)) == s.basis);
  CHECK(embed_rows(s, Eigen::MatrixXd::Zero(4, 2)).isZero(0));
  CHECK(embed_rows(s, Eigen::MatrixXd::Identity(3, 3)) == s.basis.leftCols(3));
  CHECK_THROWS_AS(embed_rows(s, Eigen::MatrixXd::Zero(5, 2)), ValidationError);
}

TEST_CASE("factor embeddings reproduce T through their inner products") {
  const auto inst = permuted_copy(make_sphere(1), 3, 0.0);
  const auto sx = eigensolve(cotan_laplacian(inst.x), 10);
  const auto sy = eigensolve(cotan_laplacian(inst.y), 10);
  Rng rng(1);
  const FactorPair fp{test::random_matrix(rng, 10, 4), test::random_matrix(rng, 10, 4)};
  const Eigen::MatrixXd t = sy.basis * fp.A * fp.B.transpose() * sx.basis.transpose();
  CHECK((embed_rows(sy, fp.A) * embed_rows(sx, fp.B).transpose() - t).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("nearest neighbours: tree and brute force agree") {
  Rng rng(2);
  for (int d : {1, 2, 5}) {
    const auto pts = test::random_matrix(rng, 300, d);
    const auto q = test::random_matrix(rng, 100, d);
    NearestNeighbors tree(pts, 0);
    NearestNeighbors brute(pts);
    const auto expected = brute_nearest(q, pts);
    for (Index i = 0; i < q.rows(); ++i) {
      CHECK(tree.query(q.row(i)) == expected[i]);
      CHECK(brute.query(q.row(i)) == expected[i]);
    }
  }
}

TEST_CASE("nearest neighbours: ties go to the lowest index") {
  Eigen::MatrixXd pts(4, 1);
  pts << 1, -1, 1, 3;
  for (Index limit : {Index(0), Index(100)}) {
    NearestNeighbors nn(pts, limit);
    CHECK(nn.query(Eigen::RowVectorXd::Zero(1)) == 0);
    CHECK(nn.query(Eigen::RowVectorXd::Constant(1, 2.0)) == 0);
  }
  Eigen::MatrixXd dup = Eigen::MatrixXd::Zero(50, 2);
  NearestNeighbors nn(dup, 0);
  CHECK(nn.query(Eigen::RowVector2d(1, 1)) == 0);
}

TEST_CASE("nearest_rows does not depend on the thread count") {
  Rng rng(3);
  const auto s = test::random_matrix(rng, 500, 4);
  const auto t = test::random_matrix(rng, 400, 4);
  const auto one = nearest_rows(s, t);
  set_thread_count(4);
  const auto four = nearest_rows(s, t);
  set_thread_count(1);
  CHECK(one == four);
  CHECK(one == brute_nearest(s, t));
}

TEST_CASE("Procrustes matches a 1 degree grid search in 2D") {
  Rng rng(4);
  const auto src = test::random_matrix(rng, 20, 2);
  const auto tgt = test::random_matrix(rng, 20, 2);
  const auto cost = [&](const Eigen::Matrix2d& c) { return (src - tgt * c).squaredNorm(); };
  double best = INFINITY;
  for (int deg = 0; deg < 360; ++deg) {
    const double a = deg * M_PI / 180;
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    Eigen::Matrix2d f;
    f << std::cos(a), std::sin(a), std::sin(a), -std::cos(a);
    best = std::min({best, cost(r), cost(f)});
  }
  const Eigen::Matrix2d c = procrustes(src, tgt);
  CHECK((c.transpose() * c - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(cost(c) <= best + 1e-12);
  // a 1 degree grid is within a hair of the optimum
  CHECK(best - cost(c) <= 1e-2 * best);
}

TEST_CASE("polar factor") {
  Rng rng(5);
  const auto q = random_orthogonal(rng, 5);
  CHECK((polar_factor(q) - q).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((polar_factor(3.0 * q) - q).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ICP: identical embeddings") {
  Rng rng(6);
  const auto x = test::random_matrix(rng, 40, 3);
  const auto r = icp_refine(x, x, Eigen::MatrixXd::Identity(3, 3));
  CHECK(r.map.target == iota(40));
  CHECK(r.converged);
  CHECK(r.cost.front() == 0.0);
}

TEST_CASE("ICP recovers a random rotation") {
  Rng rng(7);
  // distinct axis scales keep rows well separated; ICP is local, so angles stay below one radian
  Eigen::MatrixXd x = test::random_matrix(rng, 100, 3);
  x.col(1) *= 3.0;
  x.col(2) *= 9.0;
  for (int t = 0; t < 10; ++t) {
    const Eigen::Vector3d axis = test::random_matrix(rng, 3, 1).col(0).normalized();
    const double angle = rng.uniform();
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    const Eigen::MatrixXd y = x * rot.transpose();
    const auto res = icp_refine(x, y, Eigen::MatrixXd::Identity(3, 3), 20);
    CHECK(res.map.target == iota(100));
  }
}

TEST_CASE("ICP cost trace is monotone and rotation invariant") {
  Rng rng(8);
  const auto x = test::random_matrix(rng, 80, 4);
  const Eigen::MatrixXd y = test::random_matrix(rng, 90, 4);
  const auto a = icp_refine(x, y, Eigen::MatrixXd::Identity(4, 4));
  for (std::size_t i = 1; i < a.cost.size(); ++i) CHECK(a.cost[i] <= a.cost[i - 1] + 1e-12 * a.cost[0]);

  const auto r = random_orthogonal(rng, 4);
  const auto b = icp_refine(x * r, y * r, Eigen::MatrixXd::Identity(4, 4));
  CHECK(a.map == b.map);
}

TEST_CASE("ICP argument errors") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  CHECK_THROWS_AS(icp_refine(Eigen::MatrixXd(3, 0), Eigen::MatrixXd(3, 0), Eigen::MatrixXd(0, 0)), ValidationError);
  CHECK_THROWS_AS(icp_refine(Eigen::MatrixXd(0, 2), x, Eigen::MatrixXd::Identity(2, 2)), ValidationError);
  CHECK_THROWS_AS(icp_refine(x, Eigen::MatrixXd::Ones(3, 3), Eigen::MatrixXd::Identity(2, 2)), ValidationError);
}

TEST_CASE("conversion of exact maps on a permuted sphere") {
  const auto inst = permuted_copy(make_sphere(2), 11, 0.0);
  const auto sx = eigensolve(cotan_laplacian(inst.x), 20);
  const auto sy = eigensolve(cotan_laplacian(inst.y), 20);
  const auto fp = init_from_pointwise(inst.groundtruth, sx, sy, 20);
  CHECK(convert_factor_pair(sx, sy, fp).map == inst.groundtruth);
  const Eigen::MatrixXd c = fp.A * fp.B.transpose();
  CHECK(convert_basis_map(sx, sy, c).map == inst.groundtruth);
}
