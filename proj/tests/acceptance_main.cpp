// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
// Usage: lamegap_acceptance [--slow] [--workers N] [id ...]
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "lamegap/acceptance.hpp"

int main(int argc, char** argv) {
  lamegap::AcceptanceOptions options;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--slow") {
      options.slow = true;
    } else if (arg == "--workers" && i + 1 < argc) {
      options.workers = std::atoi(argv[++i]);
    } else {
      ids.push_back(std::atoi(arg.c_str()));
    }
  }
  const auto results = lamegap::run_acceptance(options, ids, &std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
