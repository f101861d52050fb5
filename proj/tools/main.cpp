#include "commands.hpp"

#include "fmc/common.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>

using namespace fmc::cli;

int main(int argc, char** argv) {
  CLI::App app{"Functional correspondence between shapes by geometric matrix completion"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  for (int i = 0; i < argc; ++i) common.argv.emplace_back(argv[i]);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (falls back to FMC_THREADS)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", common.seed, "random seed");

  std::function<int()> run;

  LaplacianArgs lap;
  auto* c_lap = app.add_subcommand("laplacian", "build a Laplacian from a mesh or point cloud");
  c_lap->add_option("--input", lap.input, "OFF mesh or XYZ point file")->required();
  c_lap->add_option("--laplacian", lap.kind, "Laplacian kind")->check(CLI::IsMember({"cotan", "graph-unnorm", "graph-rw"}));
  c_lap->add_option("--knn", lap.knn, "neighbours per point for graph Laplacians");
  c_lap->add_option("--sigma", lap.sigma, "Gaussian width, or 'auto' for self-tuning");
  c_lap->add_option("--name", lap.name, "output file stem (default: input stem)");
  c_lap->add_option("--out", lap.out, "output directory");
  c_lap->callback([&] { run = [&] { return run_laplacian(lap, common); }; });

  EigsArgs eig;
  auto* c_eig = app.add_subcommand("eigs", "leading generalized eigenpairs of a Laplacian");
  c_eig->add_option("--input", eig.input, "Laplacian file (.fms)")->required();
  c_eig->add_option("--laplacian", eig.kind, "kind, if no sidecar is present")
      ->check(CLI::IsMember({"cotan", "graph-unnorm", "graph-rw"}));
  c_eig->add_option("--kprime", eig.kprime, "number of eigenpairs")->check(CLI::PositiveNumber);
  c_eig->add_option("--method", eig.method, "auto, dense or iterative");
  c_eig->add_option("--name", eig.name, "output prefix stem (default: input stem)");
  c_eig->add_option("--out", eig.out, "output directory");
  c_eig->callback([&] { run = [&] { return run_eigs(eig, common); }; });

  SolveArgs sol;
  auto* c_sol = app.add_subcommand("solve", "solve for a functional map");
  c_sol->add_option("--input", sol.input, "spectrum prefix of the source shape")->required();
  c_sol->add_option("--input2", sol.input2, "spectrum prefix of the target shape")->required();
  c_sol->add_option("--method", sol.method)->check(CLI::IsMember({"baseline", "coupled", "subspace"}));
  c_sol->add_option("--profile", sol.profile, "princeton-scarce or princeton-rich");
  auto* o_k = c_sol->add_option("--k", sol.k)->check(CLI::PositiveNumber);
  auto* o_kp = c_sol->add_option("--kprime", sol.kprime)->check(CLI::PositiveNumber);
  c_sol->add_option("--mu1", sol.mu1);
  c_sol->add_option("--mu2", sol.mu2);
  c_sol->add_option("--mu3", sol.mu3);
  c_sol->add_option("--mu4", sol.mu4);
  c_sol->add_option("--xi", sol.xi);
  c_sol->add_option("--seeds", sol.seeds, "CSV of src,dst pairs");
  c_sol->add_option("--descriptors", sol.descriptors, "F.fmc,G.fmc");
  c_sol->add_option("--init", sol.init)->check(CLI::IsMember({"baseline", "zero", "file"}));
  c_sol->add_option("--init-file", sol.init_file, "A.fmc,B.fmc for --init file");
  c_sol->add_option("--max-iters", sol.max_iters)->check(CLI::PositiveNumber);
  c_sol->add_option("--grad-tol", sol.grad_tol);
  c_sol->add_option("--rel-obj-tol", sol.rel_obj_tol);
  c_sol->add_option("--out", sol.out, "output directory");
  c_sol->callback([&] {
    sol.k_given = o_k->count() > 0;
    sol.kprime_given = o_kp->count() > 0;
    run = [&] { return run_solve(sol, common); };
  });

  ConvertArgs conv;
  auto* c_conv = app.add_subcommand("convert", "point-wise map from a solved functional map");
  c_conv->add_option("--input", conv.input, "spectrum prefix of the source shape")->required();
  c_conv->add_option("--input2", conv.input2, "spectrum prefix of the target shape")->required();
  c_conv->add_option("--solution", conv.solution, "output directory of solve")->required();
  c_conv->add_option("--max-iters", conv.max_iters)->check(CLI::PositiveNumber);
  c_conv->add_option("--out", conv.out, "output directory");
  c_conv->callback([&] { run = [&] { return run_convert(conv, common); }; });

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "geodesic error of a map against groundtruth");
  c_ev->add_option("--input", ev.input, "target shape")->required();
  c_ev->add_option("--map", ev.map, "predicted point-wise map");
  c_ev->add_option("--groundtruth", ev.groundtruth, "groundtruth point-wise map")->required();
  c_ev->add_option("--symmetry", ev.symmetry, "map of the target onto its symmetric image");
  c_ev->add_option("--knn", ev.knn, "neighbours for point-cloud geodesics");
  c_ev->add_option("--solution", ev.solution, "solve output directory, for soft errors");
  c_ev->add_option("--spectra", ev.spectra, "X-prefix,Y-prefix for soft errors");
  c_ev->add_option("--out", ev.out, "output directory");
  c_ev->callback([&] { run = [&] { return run_evaluate(ev, common); }; });

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "permuted copy of a sphere or mesh with groundtruth");
  c_syn->add_option("--subdiv", syn.subdivisions, "sphere subdivisions");
  c_syn->add_option("--noise", syn.noise, "jitter relative to the bounding-box diagonal");
  c_syn->add_option("--q", syn.seeds, "number of seed pairs");
  c_syn->add_option("--input", syn.input, "mesh to copy instead of a sphere");
  c_syn->add_option("--out", syn.out, "output directory");
  c_syn->callback([&] { run = [&] { return run_synth(syn, common); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("FMC_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) fmc::set_thread_count(threads);

  try {
    return run();
  } catch (const fmc::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fmc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
