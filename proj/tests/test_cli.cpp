// End-to-end checks of the command line tool. The binary path arrives via
// the MFSPIKE_BIN environment variable (set by ctest).

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "mfspike/io.hpp"

namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* bin = std::getenv("MFSPIKE_BIN");
  return bin ? bin : "";
}

int run(const std::string& args) {
  const int status = std::system((binary() + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

void write(const fs::path& path, const std::string& content) {
  std::ofstream(path) << content;
}

const char* kModel = R"({
  "drift": {"kind": "linear-decay"},
  "rate": {"kind": "two-minus-gauss"},
  "weights": {"kind": "uniform", "a": -2.0, "b": 3.0},
  "n": 200,
  "x0": -1.0,
  "horizon": 2.0
})";

}  // namespace

TEST_CASE("command line round trip") {
  if (binary().empty()) {
    MESSAGE("MFSPIKE_BIN not set; skipping CLI tests");
    return;
  }
  const fs::path dir = fs::temp_directory_path() / "mfspike_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write(dir / "model.json", kModel);

  SUBCASE("simulate writes events and a manifest") {
    CHECK(run("simulate --config " + (dir / "model.json").string() +
              " --seed 9 --out " + (dir / "run").string()) == 0);
    CHECK(fs::exists(dir / "run" / "events.csv"));
    CHECK(fs::exists(dir / "run" / "trajectory.bin"));
    CHECK(fs::exists(dir / "run" / "manifest.json"));
    // Same seed twice: bit-identical outputs.
    CHECK(run("simulate --config " + (dir / "model.json").string() +
              " --seed 9 --out " + (dir / "run2").string()) == 0);
    CHECK(mfspike::file_digest((dir / "run" / "events.csv").string()) ==
          mfspike::file_digest((dir / "run2" / "events.csv").string()));
    CHECK(mfspike::file_digest((dir / "run" / "trajectory.bin").string()) ==
          mfspike::file_digest((dir / "run2" / "trajectory.bin").string()));

    SUBCASE("estimate on the stored run") {
      write(dir / "est.json", R"({
        "kernel": {"shape": "rectangular"},
        "bandwidth": 0.1,
        "x_stars": [-0.6, -0.2, 0.0, 7.0]
      })");
      CHECK(run("estimate --traj " + (dir / "run" / "trajectory.bin").string() +
                " --config " + (dir / "est.json").string() + " --out " +
                (dir / "est").string()) == 0);
      const std::string csv =
          mfspike::read_file((dir / "est" / "estimates.csv").string());
      CHECK(csv.find("x_star,estimate") == 0);
      CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 rows
      CHECK(csv.find(",1\n") != std::string::npos);  // degenerate flag at 7.0
    }

    SUBCASE("empty point list yields a header-only CSV") {
      write(dir / "est0.json", R"({
        "kernel": {"shape": "rectangular"},
        "bandwidth": 0.1,
        "x_stars": []
      })");
      CHECK(run("estimate --traj " + (dir / "run" / "trajectory.bin").string() +
                " --config " + (dir / "est0.json").string() + " --out " +
                (dir / "est0").string()) == 0);
      const std::string csv =
          mfspike::read_file((dir / "est0" / "estimates.csv").string());
      CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
    }
  }

  SUBCASE("invalid population size is a config error naming the invariant") {
    std::string bad = kModel;
    bad.replace(bad.find("200"), 3, "0");
    write(dir / "bad.json", bad);
    CHECK(run("simulate --config " + (dir / "bad.json").string() + " --out " +
              (dir / "badrun").string()) != 0);
  }

  SUBCASE("flow subcommand") {
    CHECK(run("flow --config " + (dir / "model.json").string() + " --out " +
              (dir / "flow").string()) == 0);
    const std::string csv =
        mfspike::read_file((dir / "flow" / "flow.csv").string());
    CHECK(csv.find("t,x\n") == 0);
    CHECK(fs::exists(dir / "flow" / "equilibria.json"));
  }

  SUBCASE("check-config") {
    CHECK(run("check-config --config " + (dir / "model.json").string()) == 0);
    CHECK(run("check-config --config /nonexistent.json") != 0);
  }

  SUBCASE("experiments") {
    write(dir / "fixture.json", R"({"experiment": "risk-fixture"})");
    CHECK(run("experiment --plan " + (dir / "fixture.json").string() +
              " --check --out " + (dir / "fx").string()) == 0);

    write(dir / "unknown.json", R"({"experiment": "volcano"})");
    CHECK(run("experiment --plan " + (dir / "unknown.json").string() +
              " --out " + (dir / "uk").string()) != 0);

    // Degenerate CLT point: the equilibrium of the limit flow.
    write(dir / "cltbad.json", R"({
      "experiment": "clt", "n": 200, "replicates": 16,
      "x_stars": [0.6889487343788513]
    })");
    CHECK(run("experiment --plan " + (dir / "cltbad.json").string() +
              " --out " + (dir / "cb").string()) != 0);

    write(dir / "fig1.json", R"({"experiment": "fig1", "n": 300})");
    CHECK(run("experiment --plan " + (dir / "fig1.json").string() +
              " --seed 4 --out " + (dir / "f1").string()) == 0);
    CHECK(fs::exists(dir / "f1" / "fig1.csv"));
    CHECK(fs::exists(dir / "f1" / "summary.json"));
    CHECK(fs::exists(dir / "f1" / "manifest.json"));
  }
}
