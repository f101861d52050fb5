#include "fmc/evaluation.hpp"
#include "fmc/synth.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

using namespace fmc;

namespace {

EdgeGraph path_graph(int n) {
  EdgeGraph g;
  g.adjacency.resize(n);
  for (int i = 0; i + 1 < n; ++i) {
    g.adjacency[i].push_back({i + 1, 1.0});
    g.adjacency[i + 1].push_back({i, 1.0});
  }
  return g;
}

std::vector<int> all(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("path graph distances") {
  const auto d = shortest_paths(path_graph(6), 0);
  for (int j = 0; j < 6; ++j) CHECK(d(j) == j);
}

TEST_CASE("Dijkstra matches Floyd-Warshall on a random graph") {
  Rng rng(1);
  const int n = 60;
  EdgeGraph g;
  g.adjacency.resize(n);
  Eigen::MatrixXd fw = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) fw(i, i) = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < 0.08 || j == i + 1) {
        const double w = 0.1 + rng.uniform();
        g.adjacency[i].push_back({j, w});
        g.adjacency[j].push_back({i, w});
        fw(i, j) = fw(j, i) = w;
      }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) fw(i, j) = std::min(fw(i, j), fw(i, k) + fw(k, j));
  const GeodesicTable geo(g, all(n), Eigen::VectorXd::Ones(n));
  double worst = 0.0;
  for (int s = 0; s < n; ++s) worst = std::max(worst, (geo.row(s) - fw.row(s).transpose()).cwiseAbs().maxCoeff());
  CHECK(worst <= 1e-12);

  for (int t = 0; t < 1000; ++t) {
    const int a = static_cast<int>(rng.below(n)), b = static_cast<int>(rng.below(n)), c = static_cast<int>(rng.below(n));
    CHECK(geo.row(a)(c) <= geo.row(a)(b) + geo.row(b)(c) + 1e-12);
  }
  for (int s = 0; s < n; ++s) CHECK(geo.row(s)(s) == 0.0);
  CHECK(geo.row(3)(17) == geo.row(17)(3));
}

TEST_CASE("mesh edge graph uses Euclidean edge lengths") {
  const auto mesh = make_sphere(0);
  const auto g = edge_graph(mesh);
  CHECK(g.size() == 12);
  for (const auto& arc : g.adjacency[0])
    CHECK(arc.length == doctest::Approx((mesh.vertices.row(0) - mesh.vertices.row(arc.to)).norm()));
  CHECK(g.adjacency[0].size() == 5u);
}

TEST_CASE("hard error") {
  const GeodesicTable geo(path_graph(3), {0}, Eigen::VectorXd::Ones(3));
  const auto e = hard_error(PointwiseMap{{2}}, PointwiseMap{{0}}, geo);
  CHECK(e[0] == 2.0 / std::sqrt(3.0));

  const GeodesicTable unit(path_graph(4), all(4), Eigen::VectorXd::Constant(4, 0.25));
  const PointwiseMap truth{{0, 1, 2, 3}};
  CHECK(hard_error(PointwiseMap{{3, 1, 0, 3}}, truth, unit) == std::vector<double>{3.0, 0.0, 2.0, 0.0});
  for (double v : hard_error(truth, truth, unit)) CHECK(v == 0.0);

  const GeodesicTable partial(path_graph(4), {0}, Eigen::VectorXd::Ones(4));
  CHECK_THROWS_AS(hard_error(truth, truth, partial), ValidationError);
  CHECK_THROWS_AS(partial.row(2), ValidationError);
}

TEST_CASE("hard error with a symmetry map takes the closer image") {
  const GeodesicTable geo(path_graph(5), all(5), Eigen::VectorXd::Constant(5, 0.2));
  const PointwiseMap mirror{{4, 3, 2, 1, 0}};
  const auto e = hard_error(PointwiseMap{{4}}, PointwiseMap{{0}}, mirror, geo);
  CHECK(e[0] == 0.0);
  const auto f = hard_error(PointwiseMap{{2}}, PointwiseMap{{1}}, mirror, geo);
  CHECK(f[0] == 1.0);
}

TEST_CASE("soft error") {
  const GeodesicTable geo(path_graph(5), all(5), Eigen::VectorXd::Constant(5, 0.2));
  Eigen::VectorXd t = Eigen::VectorXd::Zero(5);
  t(2) = 1.0;
  CHECK(soft_error(t, 2, geo) == 0.0);

  Eigen::VectorXd two = Eigen::VectorXd::Zero(5);
  two(1) = two(4) = 0.5;
  CHECK(soft_error(two, 0, geo) == doctest::Approx((1.0 + 4.0) / 2));
  CHECK(spread(two, 0, geo) == doctest::Approx(2.5));
  CHECK(soft_error(-3.0 * two, 0, geo) == doctest::Approx(soft_error(two, 0, geo)).epsilon(1e-15));

  CHECK_THROWS_AS(soft_error(Eigen::VectorXd::Zero(5), 0, geo), ValidationError);
  CHECK_THROWS_AS(soft_error(Eigen::VectorXd::Ones(4), 0, geo), ValidationError);
}

TEST_CASE("soft error of a delta equals the hard error bitwise") {
  const auto mesh = make_sphere(2);
  Rng rng(2);
  const Eigen::VectorXd mass = (Eigen::VectorXd::Random(162).array() + 2.0).matrix();
  const GeodesicTable geo(edge_graph(mesh), all(162), mass);
  for (int t = 0; t < 300; ++t) {
    const int truth = static_cast<int>(rng.below(162)), pred = static_cast<int>(rng.below(162));
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(162);
    delta(pred) = 1.0;
    const double hard = hard_error(PointwiseMap{{pred}}, PointwiseMap{{truth}}, geo)[0];
    CHECK(soft_error(delta, truth, geo) == hard);
    delta(pred) = 0.1 + rng.uniform();
    CHECK(soft_error(delta, truth, geo) == doctest::Approx(hard).epsilon(1e-15));
  }
}

TEST_CASE("error curves") {
  const auto rho = default_thresholds();
  REQUIRE(rho.size() == 100u);
  CHECK(rho.front() == 0.0);
  CHECK(rho.back() == 0.25);

  const auto zero = error_curve({0.0, 0.0, 0.0}, rho);
  for (double f : zero.curve.fraction) CHECK(f == 1.0);

  CHECK(error_curve({0.1, 0.3}, {0.2}).curve.fraction == std::vector<double>{0.5});

  Rng rng(3);
  std::vector<double> errs;
  for (int i = 0; i < 200; ++i) errs.push_back(0.3 * rng.uniform());
  const auto c = error_curve(errs, rho);
  for (std::size_t i = 1; i < c.curve.fraction.size(); ++i) CHECK(c.curve.fraction[i] >= c.curve.fraction[i - 1]);

  test::WarningCapture warnings;
  const auto inf = error_curve({0.0, std::numeric_limits<double>::infinity()}, {0.1});
  CHECK(inf.excluded == 1);
  CHECK(inf.curve.fraction[0] == 1.0);
  CHECK_FALSE(warnings.messages.empty());

  CHECK_THROWS_AS(error_curve({}, rho), ValidationError);
  CHECK_THROWS_AS(error_curve({0.1}, {0.2, 0.1}), ValidationError);
}

TEST_CASE("disconnected target warns and reports infinity") {
  EdgeGraph g = path_graph(3);
  g.adjacency.emplace_back();
  test::WarningCapture warnings;
  const GeodesicTable geo(g, {0}, Eigen::VectorXd::Ones(4));
  CHECK(std::isinf(geo.row(0)(3)));
  CHECK_FALSE(warnings.messages.empty());
}

TEST_CASE("map columns from factors agree with the dense map") {
  const auto inst = permuted_copy(make_sphere(1), 4, 0.0);
  const auto sx = eigensolve(cotan_laplacian(inst.x), 8);
  const auto sy = eigensolve(cotan_laplacian(inst.y), 8);
  Rng rng(5);
  const FactorPair fp{test::random_matrix(rng, 8, 3), test::random_matrix(rng, 8, 3)};
  const Eigen::MatrixXd t = sy.basis * fp.A * fp.B.transpose() * sx.basis.transpose();
  CHECK((map_column(fp, sx, sy, 9) - t.col(9)).cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::MatrixXd c = fp.A * fp.B.transpose();
  CHECK((map_column(c, sx, sy, 9) - t.col(9)).cwiseAbs().maxCoeff() <= 1e-12);

  const GeodesicTable geo(edge_graph(inst.y), inst.groundtruth.target, cotan_laplacian(inst.y).mass);
  const auto a = soft_errors(fp, sx, sy, {1, 5}, inst.groundtruth, geo);
  const auto b = soft_errors(c, sx, sy, {1, 5}, inst.groundtruth, geo);
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
}
