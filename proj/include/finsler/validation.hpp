#pragma once

#include <set>
#include <string>
#include <vector>

namespace finsler {

/// One measured check: `measured` is compared against `tolerance` with <=
/// unless `lower_bound` is set, in which case measured >= tolerance passes.
struct CheckResult {
  std::string suite;
  int criterion = 0;  // acceptance criterion number, 0 for supporting checks
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool lower_bound = false;
  bool pass = false;
  double seconds = 0.0;
  std::string note;
};

struct ValidationOptions {
  int threads = 1;
  unsigned seed = 20240611u;
  int samples = 60;  // random (x, y) samples per catalog entry
  /// Acceptance criteria to run (0 = supporting checks); empty runs everything.
  std::set<int> only;

  bool wants(int criterion) const { return only.empty() || only.count(criterion) > 0; }
};

/// Suites: "kernel", "flows", "deturck" or "all". Throws Config on an unknown name.
std::vector<CheckResult> run_suite(const std::string& suite, const ValidationOptions& options = {});

std::vector<CheckResult> kernel_suite(const ValidationOptions& options);
std::vector<CheckResult> flows_suite(const ValidationOptions& options);
std::vector<CheckResult> deturck_suite(const ValidationOptions& options);

/// "PASS kernel/name measured=... tol<=... (1.2 s) note"
std::string format_check(const CheckResult& r);

}  // namespace finsler
