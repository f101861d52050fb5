#include "fmc/optimizer.hpp"

#include "fmc/common.hpp"
#include "fmc/geomio.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace fmc::opt {

void OptimizerOptions::validate() const {
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw ValidationError("Armijo constant must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ValidationError("backtracking factor must lie in (0, 1)");
  if (!(grad_tol > 0.0) || !(rel_obj_tol > 0.0)) throw ValidationError("tolerances must be positive");
  if (max_iters < 0 || max_backtracks < 1 || restart_period < 1) throw ValidationError("iteration limits must be positive");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::GradTol: return "grad_tol";
    case Termination::RelObjTol: return "rel_obj_tol";
    case Termination::MaxIters: return "max_iters";
    case Termination::LineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

Eigen::MatrixXd retract_orthonormal(const Eigen::MatrixXd& x) {
  if (x.cols() > x.rows()) throw ValidationError("retraction needs at least as many rows as columns");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(x.cols()).triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, r.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    if (std::abs(r(c, c)) <= 1e-12 * scale) throw ValidationError("retraction of a rank-deficient matrix");
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  return q;
}

namespace {

double inner(const Variables& a, const Variables& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i].array() * b[i].array()).sum();
  return s;
}

void axpy(Variables& y, double a, const Variables& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Variables scaled(const Variables& x, double a) {
  Variables out = x;
  for (auto& m : out) m *= a;
  return out;
}

// Projection onto the tangent space of the Stiefel manifold at x.
void project_tangent(const Variables& x, Variables& v) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::MatrixXd xtv = x[i].transpose() * v[i];
    v[i] -= x[i] * (0.5 * (xtv + xtv.transpose()));
  }
}

}  // namespace

OptimizeResult minimize(const ObjectiveFn& fn, Variables x, const OptimizerOptions& options) {
  options.validate();
  const bool on_manifold = options.retraction == Retraction::Orthonormal;
  if (on_manifold) {
    for (auto& m : x) m = retract_orthonormal(m);
  }

  Variables g;
  double f = fn(x, &g);
  if (!std::isfinite(f)) throw NumericalError("non-finite objective at the initial point");
  if (g.size() != x.size()) throw ValidationError("gradient has the wrong number of blocks");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (g[i].rows() != x[i].rows() || g[i].cols() != x[i].cols()) throw ValidationError("gradient shape mismatch");
  }
  if (on_manifold) project_tangent(x, g);

  OptimizeResult result;
  result.trace.push_back({0, f, std::sqrt(inner(g, g)), 0.0});
  Variables d = scaled(g, -1.0);
  double bb_step = 0.0;  // Barzilai-Borwein step from the last accepted move, 0 if unavailable
  result.termination = Termination::MaxIters;

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    const double gg = inner(g, g);
    if (std::sqrt(gg) <= options.grad_tol * (1.0 + std::abs(f))) {
      result.termination = Termination::GradTol;
      break;
    }
    double slope = inner(g, d);
    if (!(slope < 0.0)) {
      d = scaled(g, -1.0);
      slope = -gg;
    }

    double t = bb_step > 0.0 ? bb_step * gg / -slope : std::min(1.0, 1.0 / std::sqrt(gg));
    Variables x_new;
    Variables g_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int b = 0; b < options.max_backtracks; ++b, t *= options.backtrack) {
      x_new = x;
      axpy(x_new, t, d);
      if (on_manifold) {
        for (auto& m : x_new) m = retract_orthonormal(m);
      }
      f_new = fn(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + options.armijo_c1 * t * slope && f_new <= f) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.termination = Termination::LineSearchFailure;
      break;
    }
    if (on_manifold) project_tangent(x_new, g_new);

    Variables s = x_new;
    axpy(s, -1.0, x);
    Variables y = g_new;
    axpy(y, -1.0, g);
    const double sy = inner(s, y);
    bb_step = sy > 0.0 ? inner(s, s) / sy : 0.0;

    double beta = std::max(0.0, inner(g_new, y) / gg);
    if (iter % options.restart_period == 0) beta = 0.0;
    if (on_manifold) project_tangent(x_new, d);
    Variables d_new = scaled(g_new, -1.0);
    axpy(d_new, beta, d);

    const double f_old = f;
    x = std::move(x_new);
    g = std::move(g_new);
    d = std::move(d_new);
    f = f_new;
    result.trace.push_back({iter, f, std::sqrt(inner(g, g)), t});

    if (f_old - f <= options.rel_obj_tol * std::abs(f_old)) {
      result.termination = Termination::RelObjTol;
      break;
    }
  }

  result.x = std::move(x);
  result.objective = f;
  return result;
}

std::string trace_to_csv(const std::vector<TraceEntry>& trace) {
  std::string out = "iter,objective,grad_norm,step\n";
  for (const auto& e : trace) {
    out += std::to_string(e.iter) + "," + io::format_double(e.objective) + "," + io::format_double(e.grad_norm) + "," +
           io::format_double(e.step) + "\n";
  }
  return out;
}

}  // namespace fmc::opt
