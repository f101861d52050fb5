#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fmc::cli {

struct LaplacianArgs {
  std::string input;
  std::string kind = "cotan";
  int knn = 10;
  std::string sigma = "auto";
  std::string name;
  std::string out = ".";
};

struct EigsArgs {
  std::string input;  // .fms file
  std::string kind;   // overrides the sidecar
  int kprime = 60;
  std::string method = "auto";
  std::string name;
  std::string out = ".";
};

struct SolveArgs {
  std::string input;   // spectrum prefix of X
  std::string input2;  // spectrum prefix of Y
  std::string method = "subspace";
  std::string profile;
  int k = 40;
  int kprime = 60;
  double mu1 = 1e-8;
  double mu2 = 1e-8;
  double mu3 = 1e-5;
  double mu4 = 1e-8;
  double xi = 1e-3;
  std::string seeds;
  std::string descriptors;
  std::string init = "baseline";
  std::string init_file;
  int max_iters = 5000;
  double grad_tol = 1e-6;
  double rel_obj_tol = 1e-9;
  std::string out = ".";
  // set when the value came from the command line rather than a default
  bool k_given = false;
  bool kprime_given = false;
};

struct ConvertArgs {
  std::string input;
  std::string input2;
  std::string solution;
  int max_iters = 100;
  std::string out = ".";
};

struct EvaluateArgs {
  std::string input;  // target shape Y
  std::string map;
  std::string groundtruth;
  std::string symmetry;  // optional map of Y onto its symmetric image
  int knn = 10;
  std::string solution;  // optional: soft errors from a solved map
  std::string spectra;   // "X-prefix,Y-prefix" for soft errors
  std::string out = ".";
};

struct SynthArgs {
  int subdivisions = 2;
  double noise = 0.0;
  int seeds = 20;
  std::string input;  // optional shape to copy instead of a sphere
  std::string out = ".";
};

struct Common {
  std::vector<std::string> argv;
  unsigned long long seed = 1;
};

int run_laplacian(const LaplacianArgs& args, const Common& common);
int run_eigs(const EigsArgs& args, const Common& common);
int run_solve(SolveArgs args, const Common& common);
int run_convert(const ConvertArgs& args, const Common& common);
int run_evaluate(const EvaluateArgs& args, const Common& common);
int run_synth(const SynthArgs& args, const Common& common);

}  // namespace fmc::cli
