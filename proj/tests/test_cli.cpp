#include "fmc/geomio.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <sys/wait.h>

using namespace fmc;
using fmc::test::TempDir;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(FMC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(test::read_file(p)); }

// synth -> laplacian -> eigs for both shapes, inside dir
void prepare(const TempDir& dir, int q) {
  const auto d = dir.path().string();
  REQUIRE(run("synth --seed 7 --subdiv 2 --q " + std::to_string(q) + " --out " + d) == 0);
  for (const char* s : {"X", "Y"}) {
    REQUIRE(run("laplacian --input " + d + "/" + s + ".off --out " + d) == 0);
    REQUIRE(run("eigs --input " + d + "/" + s + ".fms --kprime 60 --out " + d) == 0);
  }
}

}  // namespace

TEST_CASE("cli: baseline pipeline") {
  TempDir dir;
  prepare(dir, 30);
  const auto d = dir.path().string();
  const auto log = read_json(dir / "X.fms.json");
  CHECK(log["results"]["kind"] == "cotan");

  const std::string spectra = "--input " + d + "/X --input2 " + d + "/Y ";
  REQUIRE(run("solve " + spectra + "--method baseline --k 20 --seeds " + d + "/seeds.csv --out " + d + "/base") == 0);
  const auto solve = read_json(dir / "base/solve.json");
  CHECK(solve["results"].contains("residual"));
  CHECK(solve["parameters"]["k"] == 20);
  CHECK(io::load_matrix(dir / "base/C.fmc").rows() == 20);

  REQUIRE(run("convert " + spectra + "--solution " + d + "/base --out " + d + "/base") == 0);
  REQUIRE(run("evaluate --input " + d + "/Y.off --map " + d + "/base/map.csv --groundtruth " + d +
              "/groundtruth.csv --out " + d + "/base") == 0);
  CHECK(fs::exists(dir / "base/errors.csv"));

  REQUIRE(run("evaluate --input " + d + "/Y.off --map " + d + "/groundtruth.csv --groundtruth " + d +
              "/groundtruth.csv --out " + d + "/self") == 0);
  for (double f : io::load_curve(dir / "self/curve.json").fraction) CHECK(f == 1.0);
}

TEST_CASE("cli: subspace solve is deterministic and logs its settings") {
  TempDir dir;
  prepare(dir, 20);
  const auto d = dir.path().string();
  const std::string args = "solve --input " + d + "/X --input2 " + d + "/Y --method subspace --k 40 --kprime 60 --mu1 1e-8 " +
                           "--mu2 1e-8 --mu3 1e-5 --mu4 1e-8 --xi 1e-3 --seeds " + d + "/seeds.csv --max-iters 200 --out ";
  REQUIRE(run(args + d + "/a") == 0);
  REQUIRE(run("--threads 3 " + args + d + "/b") == 0);
  CHECK(test::read_file(dir / "a/A.fmc") == test::read_file(dir / "b/A.fmc"));
  CHECK(test::read_file(dir / "a/B.fmc") == test::read_file(dir / "b/B.fmc"));
  const auto log = read_json(dir / "a/solve.json");
  CHECK(log["parameters"]["mu3"] == 1e-5);
  CHECK(log["parameters"]["laplacian_x"] == "cotan");
  CHECK(log["results"].contains("termination"));
  CHECK(log["results"].contains("objective"));
  CHECK(log.contains("timings"));

  REQUIRE(run("evaluate --input " + d + "/Y.off --groundtruth " + d + "/groundtruth.csv --solution " + d + "/a --spectra " + d +
              "/X," + d + "/Y --out " + d + "/a") == 0);
  CHECK(fs::exists(dir / "a/soft_errors.csv"));
}

TEST_CASE("cli: profiles set k and k'") {
  TempDir dir;
  prepare(dir, 20);
  const auto d = dir.path().string();
  REQUIRE(run("solve --input " + d + "/X --input2 " + d + "/Y --method baseline --profile princeton-rich --seeds " + d +
              "/seeds.csv --out " + d + "/p") == 0);
  const auto log = read_json(dir / "p/solve.json");
  CHECK(log["parameters"]["k"] == 30);
  CHECK(log["parameters"]["kprime"] == 50);
}

TEST_CASE("cli: exit codes") {
  TempDir dir;
  const auto d = dir.path().string();
  CHECK(run("laplacian --input " + d + "/missing.off --out " + d) == 1);
  CHECK(run("bogus") == 1);
  test::write_file(dir / "bad.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n");
  CHECK(run("laplacian --input " + d + "/bad.off --out " + d) == 1);
  prepare(dir, 10);
  CHECK(run("solve --input " + d + "/X --input2 " + d + "/Y --method subspace --k 70 --kprime 60 --seeds " + d +
            "/seeds.csv --out " + d + "/x") == 1);
  CHECK(run("solve --input " + d + "/X --input2 " + d + "/Y --out " + d + "/x") == 1);
}
