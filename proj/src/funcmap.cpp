#include "fmc/funcmap.hpp"

#include "fmc/common.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <set>

namespace fmc {

void CorrespondenceData::validate() const {
  if (F.cols() != G.cols()) throw ValidationError("F and G must have the same number of columns");
  if (!F.allFinite() || !G.allFinite()) throw ValidationError("correspondence data has non-finite entries");
}

CorrespondenceData delta_seeds(const std::vector<std::pair<int, int>>& pairs, Index n, Index m) {
  CorrespondenceData data;
  const auto q = static_cast<Index>(pairs.size());
  data.F = Eigen::MatrixXd::Zero(n, q);
  data.G = Eigen::MatrixXd::Zero(m, q);
  std::set<std::pair<int, int>> seen;
  for (Index l = 0; l < q; ++l) {
    const auto [i, j] = pairs[l];
    if (i < 0 || i >= n) throw ValidationError("seed source index " + std::to_string(i) + " out of range [0," + std::to_string(n) + ")");
    if (j < 0 || j >= m) throw ValidationError("seed target index " + std::to_string(j) + " out of range [0," + std::to_string(m) + ")");
    if (!seen.insert(pairs[l]).second) warn("duplicate seed pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
    data.F(i, l) = 1.0;
    data.G(j, l) = 1.0;
  }
  return data;
}

namespace {

void check_data(const Spectrum& spec_x, const Spectrum& spec_y, const CorrespondenceData& data) {
  data.validate();
  if (data.F.rows() != spec_x.size()) throw ValidationError("F has " + std::to_string(data.F.rows()) + " rows, X has " + std::to_string(spec_x.size()) + " vertices");
  if (data.G.rows() != spec_y.size()) throw ValidationError("G has " + std::to_string(data.G.rows()) + " rows, Y has " + std::to_string(spec_y.size()) + " vertices");
}

void check_k(const Spectrum& spec_x, const Spectrum& spec_y, Index k) {
  if (k < 1 || k > spec_x.rank() || k > spec_y.rank()) {
    throw ValidationError("k = " + std::to_string(k) + " must lie in [1, " + std::to_string(std::min(spec_x.rank(), spec_y.rank())) + "]");
  }
}

}  // namespace

BasisMap solve_baseline(const Spectrum& spec_x, const Spectrum& spec_y, const CorrespondenceData& data, Index k) {
  check_data(spec_x, spec_y, data);
  check_k(spec_x, spec_y, k);
  const Eigen::MatrixXd f_hat = analyze(spec_x.truncated(k), data.F);
  const Eigen::MatrixXd g_hat = analyze(spec_y.truncated(k), data.G);

  // C F̂ = Ĝ  <=>  F̂ᵀ Cᵀ = Ĝᵀ; the complete orthogonal decomposition yields the
  // minimum-norm least-squares solution when F̂ᵀ is rank-deficient.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(f_hat.transpose());
  BasisMap out;
  out.C = cod.solve(g_hat.transpose()).transpose();
  out.underdetermined = cod.rank() < k;
  out.residual = (out.C * f_hat - g_hat).norm();
  if (out.underdetermined) {
    warn("baseline system is underdetermined (rank " + std::to_string(cod.rank()) + " < k = " + std::to_string(k) + "); using the minimum-norm solution");
  }
  return out;
}

double off_diagonal_energy(const Eigen::MatrixXd& a) {
  return a.squaredNorm() - a.diagonal().squaredNorm();
}

double coupled_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, const Spectrum& spec_x, const Spectrum& spec_y,
                         const CorrespondenceData& data, double mu1, double mu2) {
  const Index k = P.rows();
  const Eigen::MatrixXd f_hat = analyze(spec_x.truncated(k), data.F);
  const Eigen::MatrixXd g_hat = analyze(spec_y.truncated(k), data.G);
  const auto lx = spec_x.eigenvalues.head(k).asDiagonal();
  const auto ly = spec_y.eigenvalues.head(k).asDiagonal();
  return (f_hat.transpose() * P - g_hat.transpose() * Q).squaredNorm() +
         mu1 * off_diagonal_energy(P.transpose() * lx * P) + mu2 * off_diagonal_energy(Q.transpose() * ly * Q);
}

CoupledBases solve_coupled_diag(const Spectrum& spec_x, const Spectrum& spec_y, const CorrespondenceData& data, Index k,
                                double mu1, double mu2, opt::OptimizerOptions options) {
  check_data(spec_x, spec_y, data);
  check_k(spec_x, spec_y, k);
  if (mu1 < 0.0 || mu2 < 0.0) throw ValidationError("mu1 and mu2 must be nonnegative");
  const Eigen::MatrixXd f_hat = analyze(spec_x.truncated(k), data.F);
  const Eigen::MatrixXd g_hat = analyze(spec_y.truncated(k), data.G);
  const Eigen::VectorXd lx = spec_x.eigenvalues.head(k);
  const Eigen::VectorXd ly = spec_y.eigenvalues.head(k);

  const opt::ObjectiveFn fn = [&](const opt::Variables& x, opt::Variables* grad) {
    const Eigen::MatrixXd& P = x[0];
    const Eigen::MatrixXd& Q = x[1];
    const Eigen::MatrixXd residual = f_hat.transpose() * P - g_hat.transpose() * Q;
    const Eigen::MatrixXd sp = P.transpose() * lx.asDiagonal() * P;
    const Eigen::MatrixXd sq = Q.transpose() * ly.asDiagonal() * Q;
    const double value = residual.squaredNorm() + mu1 * off_diagonal_energy(sp) + mu2 * off_diagonal_energy(sq);
    if (grad) {
      Eigen::MatrixXd op = sp;
      op.diagonal().setZero();
      Eigen::MatrixXd oq = sq;
      oq.diagonal().setZero();
      grad->resize(2);
      (*grad)[0] = 2.0 * f_hat * residual + 4.0 * mu1 * lx.asDiagonal() * P * op;
      (*grad)[1] = -2.0 * g_hat * residual + 4.0 * mu2 * ly.asDiagonal() * Q * oq;
    }
    return value;
  };

  options.retraction = opt::Retraction::Orthonormal;
  opt::Variables init{Eigen::MatrixXd::Identity(k, k), Eigen::MatrixXd::Identity(k, k)};
  const double initial = fn(init, nullptr);
  auto run = opt::minimize(fn, std::move(init), options);
  if (run.termination == opt::Termination::MaxIters || run.termination == opt::Termination::LineSearchFailure) {
    warn("coupled diagonalization stopped on " + std::string(opt::to_string(run.termination)) + "; returning the best iterate");
  }

  CoupledBases out;
  out.P = std::move(run.x[0]);
  out.Q = std::move(run.x[1]);
  out.objective = run.objective;
  out.initial_objective = initial;
  out.termination = run.termination;
  out.trace = std::move(run.trace);

  const Eigen::MatrixXd a = out.P.transpose() * f_hat;
  const Eigen::MatrixXd b = out.Q.transpose() * g_hat;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  for (Index l = 0; l < k; ++l) {
    const double aa = a.row(l).squaredNorm();
    if (aa > 0.0) c(l) = a.row(l).dot(b.row(l)) / aa;
  }
  out.coefficient_map = out.Q * c.asDiagonal() * out.P.transpose();
  return out;
}

void ProblemConfig::validate(Index n, Index m) const {
  if (mu1 < 0.0 || mu2 < 0.0 || mu3 < 0.0 || mu4 < 0.0) throw ValidationError("mu1..mu4 must be nonnegative");
  if (!(xi > 0.0)) throw ValidationError("xi must be positive");
  if (k < 1 || k > k_prime) throw ValidationError("need 1 <= k <= k'");
  if (k_prime > std::min(n, m)) throw ValidationError("k' = " + std::to_string(k_prime) + " exceeds min(n, m) = " + std::to_string(std::min(n, m)));
  if (block_size < 1) throw ValidationError("block size must be positive");
}

SubspaceProblem::SubspaceProblem(const Spectrum& spec_x, const Spectrum& spec_y, const CorrespondenceData& data,
                                 const ProblemConfig& config)
    : config_(config) {
  check_data(spec_x, spec_y, data);
  config.validate(spec_x.size(), spec_y.size());
  if (config.k_prime > spec_x.rank() || config.k_prime > spec_y.rank()) {
    throw ValidationError("k' = " + std::to_string(config.k_prime) + " exceeds the number of computed eigenpairs");
  }
  const Spectrum sx = spec_x.truncated(config.k_prime);
  const Spectrum sy = spec_y.truncated(config.k_prime);
  phi_ = sx.basis;
  psi_ = sy.basis;
  lambda_x_ = sx.eigenvalues;
  lambda_y_ = sy.eigenvalues;
  f_hat_ = analyze(sx, data.F);
  g_hat_ = analyze(sy, data.G);
}

void SubspaceProblem::check_shape(const FactorPair& fp) const {
  if (fp.A.rows() != config_.k_prime || fp.B.rows() != config_.k_prime || fp.A.cols() != config_.k || fp.B.cols() != config_.k) {
    throw ValidationError("factor shapes must be k' × k = " + std::to_string(config_.k_prime) + " × " + std::to_string(config_.k));
  }
}

double SubspaceProblem::stream_l1(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v, Eigen::MatrixXd* su,
                                  Eigen::MatrixXd* stv) const {
  const Index n = v.rows();
  const Index width = config_.block_size;
  const auto blocks = static_cast<std::size_t>((n + width - 1) / width);
  const double xi = config_.xi;
  std::vector<double> partial(blocks, 0.0);
  std::vector<Eigen::MatrixXd> su_parts(su ? blocks : 0);
  if (stv) stv->resize(n, u.cols());

  parallel_for(blocks, [&](std::size_t b) {
    const Index start = static_cast<Index>(b) * width;
    const Index cols = std::min(width, n - start);
    const Eigen::MatrixXd t = u * v.middleRows(start, cols).transpose();  // m × cols block of T
    const Eigen::ArrayXXd root = (t.array().square() + xi).sqrt();
    partial[b] = root.sum();
    if (su || stv) {
      const Eigen::MatrixXd s = (t.array() / root).matrix();
      if (su) su_parts[b] = s * v.middleRows(start, cols);
      if (stv) stv->middleRows(start, cols) = s.transpose() * u;
    }
  });

  double total = 0.0;
  for (double p : partial) total += p;
  if (su) {
    *su = Eigen::MatrixXd::Zero(u.rows(), u.cols());
    for (const auto& part : su_parts) *su += part;
  }
  return total;
}

ObjectiveTerms SubspaceProblem::terms(const FactorPair& fp) const {
  check_shape(fp);
  const auto& A = fp.A;
  const auto& B = fp.B;
  ObjectiveTerms out;
  out.data = (A * (B.transpose() * f_hat_) - g_hat_).squaredNorm();
  const Eigen::MatrixXd btlb = B.transpose() * lambda_x_.asDiagonal() * B;
  const Eigen::MatrixXd atla = A.transpose() * lambda_y_.asDiagonal() * A;
  out.smooth_x = config_.mu1 * ((A.transpose() * A).array() * btlb.array()).sum();
  out.smooth_y = config_.mu2 * ((B.transpose() * B).array() * atla.array()).sum();
  if (config_.mu3 != 0.0) out.sparsity = config_.mu3 * stream_l1(psi_ * A, phi_ * B, nullptr, nullptr);
  out.norm = 0.5 * config_.mu4 * (A.squaredNorm() + B.squaredNorm());
  return out;
}

double SubspaceProblem::evaluate(const FactorPair& fp, FactorPair* gradient) const {
  if (!gradient) return objective(fp);
  check_shape(fp);
  const auto& A = fp.A;
  const auto& B = fp.B;
  const auto& cfg = config_;

  const Eigen::MatrixXd btf = B.transpose() * f_hat_;  // k × q
  const Eigen::MatrixXd residual = A * btf - g_hat_;    // k' × q
  const Eigen::MatrixXd ata = A.transpose() * A;
  const Eigen::MatrixXd btb = B.transpose() * B;
  const Eigen::MatrixXd btlb = B.transpose() * lambda_x_.asDiagonal() * B;
  const Eigen::MatrixXd atla = A.transpose() * lambda_y_.asDiagonal() * A;

  ObjectiveTerms t;
  t.data = residual.squaredNorm();
  t.smooth_x = cfg.mu1 * (ata.array() * btlb.array()).sum();
  t.smooth_y = cfg.mu2 * (btb.array() * atla.array()).sum();
  t.norm = 0.5 * cfg.mu4 * (A.squaredNorm() + B.squaredNorm());

  gradient->A = 2.0 * residual * (f_hat_.transpose() * B) + 2.0 * cfg.mu1 * A * btlb +
                2.0 * cfg.mu2 * lambda_y_.asDiagonal() * A * btb + cfg.mu4 * A;
  gradient->B = 2.0 * f_hat_ * (residual.transpose() * A) + 2.0 * cfg.mu1 * lambda_x_.asDiagonal() * B * ata +
                2.0 * cfg.mu2 * B * atla + cfg.mu4 * B;

  if (cfg.mu3 != 0.0) {
    const Eigen::MatrixXd u = psi_ * A;
    const Eigen::MatrixXd v = phi_ * B;
    Eigen::MatrixXd su, stv;
    t.sparsity = cfg.mu3 * stream_l1(u, v, &su, &stv);
    gradient->A += cfg.mu3 * (psi_.transpose() * su);
    gradient->B += cfg.mu3 * (phi_.transpose() * stv);
  }
  return t.total();
}

FactorPair SubspaceProblem::gradient(const FactorPair& fp) const {
  FactorPair g;
  evaluate(fp, &g);
  return g;
}

namespace {

// Top-k factors of a k'×k' coefficient matrix via its SVD.
FactorPair factors_from_svd(const Eigen::MatrixXd& coeffs, Index k) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(coeffs, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const Index k_prime = coeffs.rows();
  FactorPair fp{Eigen::MatrixXd::Zero(k_prime, k), Eigen::MatrixXd::Zero(k_prime, k)};
  const double cutoff = 1e-12 * (sigma.size() ? sigma(0) : 0.0);
  Index rank = 0;
  for (Index l = 0; l < std::min(k, sigma.size()); ++l) {
    if (!(sigma(l) > cutoff)) break;
    const double root = std::sqrt(sigma(l));
    fp.A.col(l) = svd.matrixU().col(l) * root;
    fp.B.col(l) = svd.matrixV().col(l) * root;
    ++rank;
  }
  if (rank < k) warn("initial map has rank " + std::to_string(rank) + " < k = " + std::to_string(k) + "; padding factors with zero columns");
  return fp;
}

// Returns (Q, R) with Q = X R⁻¹-like factor satisfying Qᵀ diag(w) Q = I and X = Q R.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> weighted_orthonormalize(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd gram = x.transpose() * w.asDiagonal() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& d = eig.eigenvalues();
  const double cutoff = 1e-14 * std::max(1e-300, d.cwiseAbs().maxCoeff());
  std::vector<Index> keep;
  for (Index i = 0; i < d.size(); ++i) {
    if (d(i) > cutoff) keep.push_back(i);
  }
  Eigen::MatrixXd q(x.rows(), static_cast<Index>(keep.size()));
  Eigen::MatrixXd r(static_cast<Index>(keep.size()), x.cols());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const double root = std::sqrt(d(keep[c]));
    q.col(c) = x * eig.eigenvectors().col(keep[c]) / root;
    r.row(c) = root * eig.eigenvectors().col(keep[c]).transpose();
  }
  return {q, r};
}

}  // namespace

FactorPair init_from_coefficients(const Eigen::MatrixXd& C, Index k_prime, Index k) {
  if (C.rows() != C.cols()) throw ValidationError("coefficient map must be square");
  if (C.rows() > k_prime) throw ValidationError("coefficient map is larger than k'");
  if (k < 1 || k > k_prime) throw ValidationError("need 1 <= k <= k'");
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(k_prime, k_prime);
  padded.topLeftCorner(C.rows(), C.cols()) = C;
  return factors_from_svd(padded, k);
}

FactorPair init_from_map(const LowRankMap& map, const Spectrum& spec_x, const Spectrum& spec_y, Index k) {
  if (map.U.rows() != spec_y.size() || map.V.rows() != spec_x.size() || map.U.cols() != map.V.cols()) {
    throw ValidationError("low-rank map factors do not match the shapes");
  }
  const Index k_prime = std::min(spec_x.rank(), spec_y.rank());
  if (k < 1 || k > k_prime) throw ValidationError("need 1 <= k <= k'");

  // Weighted SVD of U Vᵀ without forming it: U = Qu Ru, V = Qv Rv with
  // mass-orthonormal Qu, Qv, then SVD of the small core Ru Rvᵀ.
  const auto [qu, ru] = weighted_orthonormalize(map.U, spec_y.mass);
  const auto [qv, rv] = weighted_orthonormalize(map.V, spec_x.mass);
  if (ru.rows() == 0 || rv.rows() == 0) {
    warn("initial map has rank 0 < k = " + std::to_string(k) + "; padding factors with zero columns");
    return {Eigen::MatrixXd::Zero(k_prime, k), Eigen::MatrixXd::Zero(k_prime, k)};
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ru * rv.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd u_tilde = qu * svd.matrixU();
  const Eigen::MatrixXd v_tilde = qv * svd.matrixV();
  const Eigen::VectorXd& sigma = svd.singularValues();

  const Eigen::MatrixXd psi = spec_y.basis.leftCols(k_prime);
  const Eigen::MatrixXd phi = spec_x.basis.leftCols(k_prime);
  FactorPair fp{Eigen::MatrixXd::Zero(k_prime, k), Eigen::MatrixXd::Zero(k_prime, k)};
  const double cutoff = 1e-12 * (sigma.size() ? sigma(0) : 0.0);
  Index rank = 0;
  for (Index l = 0; l < std::min(k, sigma.size()); ++l) {
    if (!(sigma(l) > cutoff)) break;
    const double root = std::sqrt(sigma(l));
    fp.A.col(l) = psi.transpose() * (spec_y.mass.asDiagonal() * u_tilde.col(l)) * root;
    fp.B.col(l) = phi.transpose() * (spec_x.mass.asDiagonal() * v_tilde.col(l)) * root;
    ++rank;
  }
  if (rank < k) warn("initial map has rank " + std::to_string(rank) + " < k = " + std::to_string(k) + "; padding factors with zero columns");
  return fp;
}

FactorPair init_from_pointwise(const PointwiseMap& map, const Spectrum& spec_x, const Spectrum& spec_y, Index k) {
  if (map.size() != spec_x.size()) throw ValidationError("point-wise map does not cover X");
  validate(map, spec_y.size());
  const Index k_prime = std::min(spec_x.rank(), spec_y.rank());
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(k_prime, k_prime);
  for (Index i = 0; i < map.size(); ++i) {
    const int j = map.target[i];
    coeffs.noalias() += spec_y.mass(j) * spec_y.basis.row(j).head(k_prime).transpose() * spec_x.basis.row(i).head(k_prime);
  }
  return init_from_coefficients(coeffs, k_prime, k);
}

SubspaceResult solve_subspace(const SubspaceProblem& problem, const FactorPair& init, const opt::OptimizerOptions& options) {
  const opt::ObjectiveFn fn = [&](const opt::Variables& x, opt::Variables* grad) {
    const FactorPair fp{x[0], x[1]};
    if (!grad) return problem.objective(fp);
    FactorPair g;
    const double value = problem.evaluate(fp, &g);
    *grad = {std::move(g.A), std::move(g.B)};
    return value;
  };
  SubspaceResult out;
  out.initial_objective = problem.objective(init);
  auto run = opt::minimize(fn, {init.A, init.B}, options);
  out.factors = {std::move(run.x[0]), std::move(run.x[1])};
  out.objective = run.objective;
  out.termination = run.termination;
  out.trace = std::move(run.trace);
  return out;
}

}  // namespace fmc
