#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace fmc::opt {

/// The optimization variables: one or more real matrices.
using Variables = std::vector<Eigen::MatrixXd>;

/// Returns the objective at x and writes the Euclidean gradient into *grad
/// (same shapes as x) when grad is non-null.
using ObjectiveFn = std::function<double(const Variables& x, Variables* grad)>;

enum class Retraction { None, Orthonormal };

struct OptimizerOptions {
  int max_iters = 5000;
  double grad_tol = 1e-6;      // stop when |grad| <= grad_tol * (1 + |f|)
  double rel_obj_tol = 1e-9;   // stop when a step changes f by <= rel_obj_tol * |f|
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;
  int restart_period = 100;
  Retraction retraction = Retraction::None;

  void validate() const;
};

enum class Termination { GradTol, RelObjTol, MaxIters, LineSearchFailure };
std::string_view to_string(Termination t);

struct TraceEntry {
  int iter;
  double objective;
  double grad_norm;
  double step;
};

struct OptimizeResult {
  Variables x;
  double objective = 0.0;
  Termination termination = Termination::MaxIters;
  std::vector<TraceEntry> trace;
  bool line_search_failed() const { return termination == Termination::LineSearchFailure; }
};

/// Polak-Ribière+ nonlinear conjugate gradients with Armijo backtracking from a
/// Barzilai-Borwein initial step. With Orthonormal retraction every variable is
/// kept on the Stiefel manifold (gradients projected to the tangent space, QR
/// retraction after each step).
OptimizeResult minimize(const ObjectiveFn& fn, Variables x0, const OptimizerOptions& options = {});

/// Q factor of the thin QR decomposition, with R's diagonal made positive.
Eigen::MatrixXd retract_orthonormal(const Eigen::MatrixXd& x);

/// CSV with header "iter,objective,grad_norm,step".
std::string trace_to_csv(const std::vector<TraceEntry>& trace);

}  // namespace fmc::opt
