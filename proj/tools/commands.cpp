#include "commands.hpp"

#include "fmc/common.hpp"
#include "fmc/evaluation.hpp"
#include "fmc/funcmap.hpp"
#include "fmc/geomio.hpp"
#include "fmc/laplacian.hpp"
#include "fmc/pointwise.hpp"
#include "fmc/spectral.hpp"
#include "fmc/synth.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fmc::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class RunLog {
 public:
  RunLog(std::string command, const Common& common) : start_(std::chrono::steady_clock::now()) {
    log_["command"] = std::move(command);
    log_["argv"] = common.argv;
    log_["seed"] = common.seed;
    log_["threads"] = thread_count();
  }

  json& params() { return log_["parameters"]; }
  json& results() { return log_["results"]; }
  void stage(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    log_["timings"][name] = std::chrono::duration<double>(now - start_).count();
    start_ = now;
  }

  void write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << log_.dump(2) << '\n';
  }

 private:
  json log_;
  std::chrono::steady_clock::time_point start_;
};

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing ") + what);
  if (!fs::exists(path)) throw ValidationError(std::string(what) + " not found: " + path);
}

bool is_mesh_path(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".off";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::pair<std::string, std::string> split_pair(const std::string& text, const char* what) {
  const auto comma = text.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == text.size())
    throw ValidationError(std::string(what) + " expects two comma-separated paths");
  return {text.substr(0, comma), text.substr(comma + 1)};
}

// A spectrum is stored as <prefix>.basis.fmc, <prefix>.eigenvalues.csv, <prefix>.mass.fmc.
void save_spectrum(const Spectrum& s, const fs::path& prefix) {
  io::save_matrix(s.basis, prefix.string() + ".basis.fmc");
  io::save_matrix(s.mass, prefix.string() + ".mass.fmc");
  io::save_vector_csv(std::vector<double>(s.eigenvalues.begin(), s.eigenvalues.end()), prefix.string() + ".eigenvalues.csv");
}

Spectrum load_spectrum(const std::string& prefix) {
  require_file(prefix + ".basis.fmc", "spectrum basis");
  Spectrum s;
  s.basis = io::load_matrix(prefix + ".basis.fmc");
  const Eigen::MatrixXd mass = io::load_matrix(prefix + ".mass.fmc");
  if (mass.cols() != 1 || mass.rows() != s.basis.rows()) throw ValidationError("mass does not match basis in " + prefix);
  s.mass = mass.col(0);
  const auto ev = io::load_vector_csv(prefix + ".eigenvalues.csv");
  if (static_cast<Index>(ev.size()) != s.basis.cols()) throw ValidationError("eigenvalue count does not match basis in " + prefix);
  s.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(), static_cast<Index>(ev.size()));
  return s;
}

// Laplacian kind recorded by eigs next to the spectrum, if any.
std::string spectrum_kind(const std::string& prefix) {
  const fs::path log = prefix + ".eigs.json";
  if (!fs::exists(log)) return "unknown";
  const auto j = read_json(log);
  if (!j.contains("parameters") || !j["parameters"].contains("laplacian")) return "unknown";
  return j["parameters"]["laplacian"].get<std::string>();
}

json trace_json(const std::vector<opt::TraceEntry>& trace) {
  json t = json::object();
  t["iterations"] = trace.empty() ? 0 : trace.back().iter;
  t["initial_objective"] = trace.empty() ? 0.0 : trace.front().objective;
  return t;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

}  // namespace

int run_laplacian(const LaplacianArgs& args, const Common& common) {
  require_file(args.input, "input shape");
  const auto kind = laplacian_kind_from_string(args.kind);
  RunLog log("laplacian", common);
  log.params() = {{"input", args.input}, {"laplacian", args.kind}, {"knn", args.knn}, {"sigma", args.sigma}};

  Laplacian lap;
  if (kind == LaplacianKind::MeshCotangent) {
    if (!is_mesh_path(args.input)) throw ValidationError("cotan Laplacian needs an OFF mesh");
    lap = cotan_laplacian(io::load_mesh(args.input));
  } else {
    PointCloud cloud;
    if (is_mesh_path(args.input))
      cloud.points = io::load_mesh(args.input).vertices;
    else
      cloud = io::load_point_cloud(args.input);
    SigmaMode mode = SigmaMode::self_tuning();
    if (args.sigma != "auto") {
      double s = 0.0;
      try {
        std::size_t used = 0;
        s = std::stod(args.sigma, &used);
        if (used != args.sigma.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ValidationError("--sigma expects 'auto' or a number, got '" + args.sigma + "'");
      }
      mode = SigmaMode::fixed(s);
    }
    const auto edges = build_knn_graph(cloud, args.knn);
    const auto weights = gaussian_weights(cloud, edges, mode);
    lap = graph_laplacian(weights, kind == LaplacianKind::GraphRandomWalk ? GraphNormalization::RandomWalk
                                                                          : GraphNormalization::Unnormalized);
  }
  log.stage("build");

  const auto dir = prepare_out(args.out);
  const std::string name = args.name.empty() ? fs::path(args.input).stem().string() : args.name;
  const auto file = dir / (name + ".fms");
  io::save_laplacian(lap, file);
  log.results() = {{"file", file.string()}, {"kind", to_string(lap.kind)}, {"vertices", lap.size()},
                   {"nonzeros", lap.stiffness.matrix().nonZeros()}};
  log.stage("write");
  // the sidecar doubles as the run-log and records the kind the file format omits
  log.write(file.string() + ".json");
  return 0;
}

int run_eigs(const EigsArgs& args, const Common& common) {
  require_file(args.input, "input Laplacian");
  std::string kind_name = args.kind;
  if (kind_name.empty()) {
    const fs::path sidecar = args.input + ".json";
    if (!fs::exists(sidecar)) throw ValidationError("no --laplacian given and no sidecar " + sidecar.string());
    const auto j = read_json(sidecar);
    if (!j.contains("results") || !j["results"].contains("kind")) throw ValidationError("sidecar lacks the Laplacian kind");
    kind_name = j["results"]["kind"].get<std::string>();
  }
  const auto lap = io::load_laplacian(args.input, laplacian_kind_from_string(kind_name));

  EigensolveOptions opts;
  if (args.method == "dense")
    opts.method = EigenMethod::Dense;
  else if (args.method == "iterative")
    opts.method = EigenMethod::Iterative;
  else if (args.method != "auto")
    throw ValidationError("unknown eigensolver method '" + args.method + "'");
  opts.seed = static_cast<unsigned>(common.seed);

  RunLog log("eigs", common);
  log.params() = {{"input", args.input}, {"laplacian", kind_name}, {"kprime", args.kprime}, {"method", args.method}};
  const auto spectrum = eigensolve(lap, args.kprime, opts);
  log.stage("solve");

  const auto dir = prepare_out(args.out);
  const std::string name = args.name.empty() ? fs::path(args.input).stem().string() : args.name;
  save_spectrum(spectrum, dir / name);
  log.results() = {{"prefix", (dir / name).string()},
                   {"eigenvalues", std::vector<double>(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end())}};
  log.stage("write");
  log.write(dir / (name + ".eigs.json"));
  return 0;
}

int run_solve(SolveArgs args, const Common& common) {
  if (!args.profile.empty()) {
    int kp = 0, k = 0;
    if (args.profile == "princeton-scarce") {
      kp = 350;
      k = 250;
    } else if (args.profile == "princeton-rich") {
      kp = 50;
      k = 30;
    } else {
      throw ValidationError("unknown profile '" + args.profile + "'");
    }
    if (!args.kprime_given) args.kprime = kp;
    if (!args.k_given) args.k = k;
  }

  const auto sx_full = load_spectrum(args.input);
  const auto sy_full = load_spectrum(args.input2);
  const Index n = sx_full.size(), m = sy_full.size();

  CorrespondenceData data;
  if (!args.seeds.empty() && !args.descriptors.empty()) throw ValidationError("give either --seeds or --descriptors, not both");
  if (!args.seeds.empty()) {
    require_file(args.seeds, "seed file");
    data = delta_seeds(io::load_pairs(args.seeds), n, m);
  } else if (!args.descriptors.empty()) {
    const auto [f, g] = split_pair(args.descriptors, "--descriptors");
    data.F = io::load_matrix(f);
    data.G = io::load_matrix(g);
    if (data.F.rows() != n || data.G.rows() != m) throw ValidationError("descriptor rows do not match the shapes");
    data.validate();
  } else {
    throw ValidationError("solve needs --seeds or --descriptors");
  }

  RunLog log("solve", common);
  log.params() = {{"input", args.input}, {"input2", args.input2}, {"method", args.method}, {"profile", args.profile},
                  {"k", args.k}, {"kprime", args.kprime}, {"seeds", args.seeds}, {"descriptors", args.descriptors},
                  {"laplacian_x", spectrum_kind(args.input)}, {"laplacian_y", spectrum_kind(args.input2)}};
  const auto dir = prepare_out(args.out);

  opt::OptimizerOptions options;
  options.max_iters = args.max_iters;
  options.grad_tol = args.grad_tol;
  options.rel_obj_tol = args.rel_obj_tol;
  options.validate();

  if (args.method == "baseline") {
    if (args.k > sx_full.rank() || args.k > sy_full.rank()) throw ValidationError("k exceeds the available basis size");
    const auto bm = solve_baseline(sx_full, sy_full, data, args.k);
    log.stage("solve");
    io::save_matrix(bm.C, dir / "C.fmc");
    log.results() = {{"residual", bm.residual}, {"underdetermined", bm.underdetermined}};
  } else if (args.method == "coupled") {
    if (args.k > sx_full.rank() || args.k > sy_full.rank()) throw ValidationError("k exceeds the available basis size");
    log.params()["mu1"] = args.mu1;
    log.params()["mu2"] = args.mu2;
    log.params()["optimizer"] = {{"max_iters", options.max_iters}, {"grad_tol", options.grad_tol},
                                 {"rel_obj_tol", options.rel_obj_tol}};
    const auto cb = solve_coupled_diag(sx_full, sy_full, data, args.k, args.mu1, args.mu2, options);
    log.stage("solve");
    io::save_matrix(cb.P, dir / "P.fmc");
    io::save_matrix(cb.Q, dir / "Q.fmc");
    io::save_matrix(cb.coefficient_map, dir / "C.fmc");
    write_text(dir / "trace.csv", opt::trace_to_csv(cb.trace));
    log.results() = trace_json(cb.trace);
    log.results()["objective"] = cb.objective;
    log.results()["termination"] = to_string(cb.termination);
  } else if (args.method == "subspace") {
    if (args.kprime > sx_full.rank() || args.kprime > sy_full.rank())
      throw ValidationError("kprime exceeds the available basis size");
    ProblemConfig cfg;
    cfg.mu1 = args.mu1;
    cfg.mu2 = args.mu2;
    cfg.mu3 = args.mu3;
    cfg.mu4 = args.mu4;
    cfg.xi = args.xi;
    cfg.k = args.k;
    cfg.k_prime = args.kprime;
    cfg.validate(n, m);
    const auto sx = sx_full.truncated(args.kprime);
    const auto sy = sy_full.truncated(args.kprime);
    SubspaceProblem problem(sx, sy, data, cfg);

    FactorPair init;
    Index baseline_k = 0;
    if (args.init == "baseline") {
      baseline_k = std::min<Index>({static_cast<Index>(args.k), data.count(), static_cast<Index>(args.kprime)});
      if (baseline_k < 1) throw ValidationError("baseline initialization needs at least one correspondence");
      init = init_from_coefficients(solve_baseline(sx, sy, data, baseline_k).C, args.kprime, args.k);
    } else if (args.init == "zero") {
      warn("zero initialization is a stationary point of the objective; the solver will not move");
      init.A = Eigen::MatrixXd::Zero(args.kprime, args.k);
      init.B = Eigen::MatrixXd::Zero(args.kprime, args.k);
    } else if (args.init == "file") {
      const auto [a, b] = split_pair(args.init_file, "--init-file");
      init.A = io::load_matrix(a);
      init.B = io::load_matrix(b);
    } else {
      throw ValidationError("unknown --init '" + args.init + "'");
    }
    log.params()["init"] = args.init;
    if (baseline_k > 0) log.params()["init_baseline_k"] = baseline_k;
    if (args.init == "file") log.params()["init_file"] = args.init_file;
    log.params()["mu1"] = cfg.mu1;
    log.params()["mu2"] = cfg.mu2;
    log.params()["mu3"] = cfg.mu3;
    log.params()["mu4"] = cfg.mu4;
    log.params()["xi"] = cfg.xi;
    log.params()["block_size"] = cfg.block_size;
    log.params()["optimizer"] = {{"max_iters", options.max_iters}, {"grad_tol", options.grad_tol},
                                 {"rel_obj_tol", options.rel_obj_tol}};

    const auto result = solve_subspace(problem, init, options);
    log.stage("solve");
    io::save_matrix(result.factors.A, dir / "A.fmc");
    io::save_matrix(result.factors.B, dir / "B.fmc");
    write_text(dir / "trace.csv", opt::trace_to_csv(result.trace));
    const auto terms = problem.terms(result.factors);
    log.results() = trace_json(result.trace);
    log.results()["objective"] = result.objective;
    log.results()["termination"] = to_string(result.termination);
    log.results()["terms"] = {{"data", terms.data}, {"smooth_x", terms.smooth_x}, {"smooth_y", terms.smooth_y},
                              {"sparsity", terms.sparsity}, {"norm", terms.norm}};
  } else {
    throw ValidationError("unknown method '" + args.method + "'");
  }
  log.write(dir / "solve.json");
  return 0;
}

namespace {

struct Solution {
  std::string method;
  Eigen::MatrixXd C;
  FactorPair factors;
  Index kprime = 0;
};

Solution load_solution(const std::string& dir_name) {
  const fs::path dir(dir_name);
  const auto log = read_json(dir / "solve.json");
  Solution s;
  s.method = log.at("parameters").at("method").get<std::string>();
  s.kprime = log.at("parameters").at("kprime").get<Index>();
  if (s.method == "subspace") {
    s.factors.A = io::load_matrix(dir / "A.fmc");
    s.factors.B = io::load_matrix(dir / "B.fmc");
  } else {
    s.C = io::load_matrix(dir / "C.fmc");
  }
  return s;
}

}  // namespace

int run_convert(const ConvertArgs& args, const Common& common) {
  const auto sx = load_spectrum(args.input);
  const auto sy = load_spectrum(args.input2);
  if (args.solution.empty()) throw ValidationError("convert needs --solution");
  const auto sol = load_solution(args.solution);

  RunLog log("convert", common);
  log.params() = {{"input", args.input}, {"input2", args.input2}, {"solution", args.solution}, {"method", sol.method},
                  {"max_iters", args.max_iters}};
  IcpResult icp;
  if (sol.method == "subspace") {
    if (sol.kprime > sx.rank() || sol.kprime > sy.rank()) throw ValidationError("solution uses more basis functions than given");
    icp = convert_factor_pair(sx.truncated(sol.kprime), sy.truncated(sol.kprime), sol.factors, args.max_iters);
  } else {
    icp = convert_basis_map(sx, sy, sol.C, args.max_iters);
  }
  log.stage("convert");
  const auto dir = prepare_out(args.out);
  io::save_pointwise_map(icp.map, dir / "map.csv");
  log.results() = {{"iterations", icp.iterations}, {"converged", icp.converged},
                   {"final_cost", icp.cost.empty() ? 0.0 : icp.cost.back()}};
  log.write(dir / "convert.json");
  return 0;
}

int run_evaluate(const EvaluateArgs& args, const Common& common) {
  require_file(args.input, "target shape");
  require_file(args.groundtruth, "groundtruth map");
  const auto truth = io::load_pointwise_map(args.groundtruth);

  EdgeGraph graph;
  Eigen::VectorXd mass;
  if (is_mesh_path(args.input)) {
    const auto mesh = io::load_mesh(args.input);
    graph = edge_graph(mesh);
    mass = cotan_laplacian(mesh).mass;
  } else {
    const auto cloud = io::load_point_cloud(args.input);
    graph = edge_graph(cloud, build_knn_graph(cloud, args.knn));
    mass = Eigen::VectorXd::Ones(cloud.size());
  }
  validate(truth, graph.size());
  PointwiseMap symmetry;
  if (!args.symmetry.empty()) {
    require_file(args.symmetry, "symmetry map");
    symmetry = io::load_pointwise_map(args.symmetry);
    if (symmetry.size() != graph.size()) throw ValidationError("symmetry map must cover every vertex of the target");
    validate(symmetry, graph.size());
  }

  RunLog log("evaluate", common);
  log.params() = {{"input", args.input}, {"map", args.map}, {"groundtruth", args.groundtruth}, {"symmetry", args.symmetry}, {"solution", args.solution},
                  {"spectra", args.spectra}, {"knn", args.knn}};

  std::vector<int> targets = truth.target;
  if (!symmetry.target.empty())
    for (int t : truth.target) targets.push_back(symmetry.target[t]);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  const GeodesicTable geo(graph, targets, mass);
  log.stage("geodesics");

  const auto dir = prepare_out(args.out);
  const auto thresholds = default_thresholds();
  if (!args.map.empty()) {
    require_file(args.map, "predicted map");
    const auto predicted = io::load_pointwise_map(args.map);
    if (predicted.size() != truth.size()) throw ValidationError("predicted and groundtruth maps differ in size");
    validate(predicted, graph.size());
    const auto errors = symmetry.target.empty() ? hard_error(predicted, truth, geo) : hard_error(predicted, truth, symmetry, geo);
    const auto curve = error_curve(errors, thresholds);
    io::save_vector_csv(errors, dir / "errors.csv");
    io::save_curve(curve.curve, dir / "curve.json");
    const auto finite = static_cast<double>(errors.size() - curve.excluded);
    double sum = 0.0;
    for (double e : errors)
      if (std::isfinite(e)) sum += e;
    log.results()["hard"] = {{"mean", finite > 0 ? sum / finite : 0.0}, {"excluded", curve.excluded}};
  }
  if (!args.solution.empty()) {
    const auto [px, py] = split_pair(args.spectra, "--spectra");
    const auto sx = load_spectrum(px);
    const auto sy = load_spectrum(py);
    const auto sol = load_solution(args.solution);
    std::vector<int> sources(truth.size());
    std::iota(sources.begin(), sources.end(), 0);
    const auto errors = sol.method == "subspace"
                            ? soft_errors(sol.factors, sx.truncated(sol.kprime), sy.truncated(sol.kprime), sources, truth, geo)
                            : soft_errors(sol.C, sx, sy, sources, truth, geo);
    const auto curve = error_curve(errors, thresholds);
    io::save_vector_csv(errors, dir / "soft_errors.csv");
    io::save_curve(curve.curve, dir / "soft_curve.json");
    log.results()["soft"] = {{"mean", std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size())},
                             {"excluded", curve.excluded}};
  }
  if (args.map.empty() && args.solution.empty()) throw ValidationError("evaluate needs --map or --solution");
  log.stage("evaluate");
  log.write(dir / "evaluate.json");
  return 0;
}

int run_synth(const SynthArgs& args, const Common& common) {
  if (args.noise < 0.0) throw ValidationError("--noise must be non-negative");
  const Mesh shape = args.input.empty() ? make_sphere(args.subdivisions) : io::load_mesh(args.input);
  if (args.subdivisions < 0 || args.subdivisions > 5) throw ValidationError("--subdiv must be in [0,5]");
  const auto inst = permuted_copy(shape, common.seed, args.noise);
  if (args.seeds < 0 || args.seeds > inst.x.vertex_count()) throw ValidationError("--q exceeds the vertex count");
  const auto pairs = sample_seed_pairs(inst.groundtruth, args.seeds, common.seed + 1);

  const auto dir = prepare_out(args.out);
  io::save_mesh(inst.x, dir / "X.off");
  io::save_mesh(inst.y, dir / "Y.off");
  io::save_pointwise_map(inst.groundtruth, dir / "groundtruth.csv");
  io::save_pairs(pairs, dir / "seeds.csv");

  RunLog log("synth", common);
  log.params() = {{"input", args.input}, {"subdivisions", args.subdivisions}, {"noise", args.noise}, {"q", args.seeds}};
  log.results() = {{"vertices", inst.x.vertex_count()}, {"faces", inst.x.face_count()}};
  log.write(dir / "synth.json");
  return 0;
}

}  // namespace fmc::cli
