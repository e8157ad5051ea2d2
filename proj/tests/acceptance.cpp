// Acceptance gate: runs criteria 1-10 at their stated sizes and tolerances
// and prints one PASS/FAIL line per criterion. Optional arguments restrict
// the run to the listed criterion ids.
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "dreamhop/verification.hpp"

int main(int argc, char** argv) {
  dreamhop::VerifyOptions options;
  options.level = dreamhop::VerifyLevel::Full;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::stoi(argv[i]));
  if (ids.empty()) ids = dreamhop::criteria_for(dreamhop::VerifyLevel::Full);

  bool all = true;
  for (int id : ids) {
    const auto r = dreamhop::run_criterion(id, options);
    std::cout << "criterion " << id << " [" << r.name << "]: " << (r.passed ? "PASS" : "FAIL") << "  ("
              << r.seconds << " s)" << std::endl;
    for (const auto& c : r.checks) {
      std::cout << "    " << (c.passed ? "ok  " : "FAIL") << "  " << c.name << "  value=" << c.value;
      if (c.tolerance > 0.0) std::cout << " expected=" << c.expected << " tol=" << c.tolerance;
      if (c.tolerance == 0.0 && c.expected != 0.0) std::cout << " bound=" << c.expected;
      std::cout << '\n';
    }
    all = all && r.passed;
  }
  std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
