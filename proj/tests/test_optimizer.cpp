#include "fmc/optimizer.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <limits>

using namespace fmc;
using namespace fmc::opt;

namespace {

bool monotone(const std::vector<TraceEntry>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i].objective > trace[i - 1].objective) return false;
  return true;
}

ObjectiveFn rosenbrock() {
  return [](const Variables& x, Variables* g) {
    const double a = x[0](0), b = x[0](1);
    if (g) {
      g->assign(1, Eigen::MatrixXd(2, 1));
      (*g)[0](0) = -2 * (1 - a) - 400 * a * (b - a * a);
      (*g)[0](1) = 200 * (b - a * a);
    }
    return (1 - a) * (1 - a) + 100 * (b - a * a) * (b - a * a);
  };
}

}  // namespace

TEST_CASE("convex quadratic converges in at most dim iterations") {
  Rng rng(1);
  const Eigen::MatrixXd target = test::random_matrix(rng, 4, 3);
  const ObjectiveFn f = [&](const Variables& x, Variables* g) {
    if (g) *g = {2 * (x[0] - target)};
    return (x[0] - target).squaredNorm();
  };
  OptimizerOptions o;
  o.grad_tol = 1e-12;
  const auto r = minimize(f, {Eigen::MatrixXd::Zero(4, 3)}, o);
  CHECK((r.x[0] - target).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(r.trace.back().iter <= 12);
  CHECK(monotone(r.trace));
}

TEST_CASE("Rosenbrock from (-1.2, 1)") {
  Eigen::MatrixXd x0(2, 1);
  x0 << -1.2, 1.0;
  OptimizerOptions o;
  o.max_iters = 10000;
  o.grad_tol = 1e-10;
  o.rel_obj_tol = 1e-16;
  const auto r = minimize(rosenbrock(), {x0}, o);
  CHECK(r.objective < 1e-6);
  CHECK(std::abs(r.x[0](0) - 1.0) < 1e-2);
  CHECK(monotone(r.trace));
  CHECK(r.trace.front().objective == doctest::Approx(24.2));
}

TEST_CASE("optimizer is deterministic") {
  Eigen::MatrixXd x0(2, 1);
  x0 << -1.2, 1.0;
  const auto a = minimize(rosenbrock(), {x0});
  const auto b = minimize(rosenbrock(), {x0});
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].objective == b.trace[i].objective);
    CHECK(a.trace[i].step == b.trace[i].step);
  }
  CHECK(a.x[0] == b.x[0]);
}

TEST_CASE("non-finite start is an error") {
  const ObjectiveFn f = [](const Variables&, Variables* g) {
    if (g) *g = {Eigen::MatrixXd::Zero(1, 1)};
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(minimize(f, {Eigen::MatrixXd::Zero(1, 1)}), NumericalError);
}

TEST_CASE("termination reasons") {
  const ObjectiveFn f = [](const Variables& x, Variables* g) {
    if (g) *g = {2 * x[0]};
    return x[0].squaredNorm();
  };
  CHECK(minimize(f, {Eigen::MatrixXd::Zero(2, 2)}).termination == Termination::GradTol);
  OptimizerOptions o;
  o.max_iters = 1;
  o.grad_tol = 1e-300;
  o.rel_obj_tol = 1e-300;
  Eigen::MatrixXd x0(2, 1);
  x0 << -1.2, 1.0;
  CHECK(minimize(rosenbrock(), {x0}, o).termination == Termination::MaxIters);
  CHECK(to_string(Termination::RelObjTol) == "rel_obj_tol");

  // a gradient pointing uphill defeats the line search
  const ObjectiveFn liar = [](const Variables& x, Variables* g) {
    if (g) *g = {-2 * x[0]};
    return x[0].squaredNorm();
  };
  const auto r = minimize(liar, {Eigen::MatrixXd::Ones(2, 1)});
  CHECK(r.line_search_failed());
  CHECK(r.x[0] == Eigen::MatrixXd::Ones(2, 1));
}

TEST_CASE("options validation") {
  OptimizerOptions o;
  CHECK_NOTHROW(o.validate());
  o.armijo_c1 = 1.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.backtrack = 0.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.grad_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
}

TEST_CASE("orthonormal retraction") {
  Rng rng(2);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(test::random_matrix(rng, 6, 6));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(6, 3);
  CHECK((retract_orthonormal(q) - q).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK((retract_orthonormal(2 * Eigen::MatrixXd::Identity(4, 4)) - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-15);

  const Eigen::MatrixXd x = test::random_matrix(rng, 8, 3);
  const Eigen::MatrixXd r = retract_orthonormal(x);
  CHECK((r.transpose() * r - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::MatrixXd px = x * (x.transpose() * x).inverse() * x.transpose();
  CHECK((px - r * r.transpose()).cwiseAbs().maxCoeff() <= 1e-10);

  Eigen::MatrixXd deficient = test::random_matrix(rng, 5, 2);
  deficient.col(1) = deficient.col(0);
  CHECK_THROWS_AS(retract_orthonormal(deficient), ValidationError);
}

TEST_CASE("Stiefel minimization finds the top eigenspace") {
  Rng rng(3);
  const Eigen::MatrixXd b = test::random_matrix(rng, 7, 7);
  const Eigen::MatrixXd s = b * b.transpose();
  const ObjectiveFn f = [&](const Variables& x, Variables* g) {
    if (g) *g = {-2 * s * x[0]};
    return -(x[0].transpose() * s * x[0]).trace();
  };
  OptimizerOptions o;
  o.retraction = Retraction::Orthonormal;
  o.grad_tol = 1e-10;
  o.rel_obj_tol = 1e-15;
  const auto r = minimize(f, {Eigen::MatrixXd::Identity(7, 2)}, o);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  CHECK(-r.objective == doctest::Approx(es.eigenvalues()(6) + es.eigenvalues()(5)).epsilon(1e-8));
  CHECK((r.x[0].transpose() * r.x[0] - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(monotone(r.trace));
}

TEST_CASE("trace CSV") {
  const std::vector<TraceEntry> t{{0, 2.0, 1.0, 0.0}, {1, 1.0, 0.5, 0.25}};
  CHECK(trace_to_csv(t) == "iter,objective,grad_norm,step\n0,2,1,0\n1,1,0.5,0.25\n");
}
