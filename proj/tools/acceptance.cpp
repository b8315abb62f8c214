// Acceptance report: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
//   finsler_acceptance [--verbose] [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "finsler/cli.hpp"
#include "finsler/io.hpp"
#include "finsler/validation.hpp"

namespace {

using namespace finsler;
namespace fs = std::filesystem;

struct Criterion {
  const char* title;
  double budget_seconds;  // <= 0: no runtime budget
};

const std::map<int, Criterion> kCriteria = {
    {1, {"round_sphere Ric = 1 (analytic and lattice)", 10.0}},
    {2, {"rosenau(-1) Ric = R/2", 5.0}},
    {3, {"Einstein scaling under Ricci flow", 60.0}},
    {4, {"rosenau(-2) flows onto rosenau(-1.9)", 300.0}},
    {5, {"DeTurck flow with background = initial data", 0.0}},
    {6, {"DeTurck/Ricci correspondence on torus_bump(0.1)", 600.0}},
    {7, {"invariant suites", 30.0}},
    {8, {"repeated flow runs are byte-identical", 0.0}},
};

const char* kDeterminismConfig = R"({
  "structure": {"name": "torus_bump", "params": {"eps": 0.1}},
  "grid": {"nx1": 17, "nx2": 17, "bounds": [[0, 6.283185307179586], [0, 6.283185307179586]],
           "boundary": "periodic", "ntheta": 32},
  "flow": {"kind": "ricci", "integrator": "rk4", "dt": 0.001, "t_end": 0.02, "snapshot_stride": 5},
  "output": {"directory": "unused", "formats": ["csv"]}
})";

/// Runs the CLI `flow` command twice into fresh directories and compares files.
CheckResult cli_determinism() {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.suite = "cli";
  r.criterion = 8;
  r.name = "flow command run twice: differing files";
  r.tolerance = 0.0;
  const fs::path root = fs::temp_directory_path() / ("finsler_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string config = (root / "config.json").string();
  write_file(config, kDeterminismConfig);
  std::ostringstream sink;
  int codes[2];
  for (int i = 0; i < 2; ++i) {
    codes[i] = run_cli({"flow", config, "--out", (root / ("run" + std::to_string(i))).string()}, sink,
                       sink);
  }
  int differing = 0;
  for (const char* name : {"snapshots.csv", "diagnostics.csv"}) {
    try {
      differing += read_file((root / "run0" / name).string()) != read_file((root / "run1" / name).string());
    } catch (const std::exception&) {
      ++differing;
    }
  }
  if (codes[0] != 0 || codes[1] != 0) {
    differing += 2;
    r.note = "flow exited with " + std::to_string(codes[0]) + "/" + std::to_string(codes[1]);
  }
  fs::remove_all(root);
  r.measured = differing;
  r.pass = differing == 0;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  bool verbose = false;
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--verbose" || a == "-v") {
      verbose = true;
    } else {
      try {
        wanted.insert(std::stoi(a));
      } catch (const std::exception&) {
        std::cerr << "usage: finsler_acceptance [--verbose] [criterion numbers...]\n";
        return 2;
      }
    }
  }
  if (wanted.empty())
    for (const auto& [n, c] : kCriteria) wanted.insert(n);

  ValidationOptions options;
  options.only = wanted;
  std::vector<CheckResult> results;
  auto take = [&](std::vector<CheckResult> rs) {
    for (auto& r : rs)
      if (wanted.count(r.criterion)) results.push_back(std::move(r));
  };
  if (wanted.count(1) || wanted.count(2) || wanted.count(7)) take(kernel_suite(options));
  if (wanted.count(3) || wanted.count(4) || wanted.count(8)) take(flows_suite(options));
  if (wanted.count(5) || wanted.count(6)) take(deturck_suite(options));
  if (wanted.count(8)) results.push_back(cli_determinism());

  bool all = true;
  for (int n : wanted) {
    const auto it = kCriteria.find(n);
    if (it == kCriteria.end()) continue;
    bool pass = true;
    double seconds = 0.0;
    int checks = 0;
    std::string worst;
    for (const auto& r : results) {
      if (r.criterion != n) continue;
      ++checks;
      seconds += r.seconds;
      if (!r.pass) {
        pass = false;
        if (worst.empty()) worst = r.name;
      }
    }
    if (checks == 0) pass = false;
    const double budget = it->second.budget_seconds;
    const bool in_time = budget <= 0.0 || seconds <= budget;
    char line[256];
    std::snprintf(line, sizeof line, "criterion %d: %s  %s  (%d checks, %.1f s%s)", n,
                  pass && in_time ? "PASS" : "FAIL", it->second.title, checks, seconds,
                  budget > 0.0 ? (in_time ? " within budget" : " OVER BUDGET") : "");
    std::cout << line;
    if (!worst.empty()) std::cout << "  first failure: " << worst;
    std::cout << "\n";
    if (verbose)
      for (const auto& r : results)
        if (r.criterion == n) std::cout << "    " << format_check(r) << "\n";
    all = all && pass && in_time;
  }
  std::cout << (all ? "ACCEPTANCE PASS\n" : "ACCEPTANCE FAIL\n");
  return all ? 0 : 1;
}
