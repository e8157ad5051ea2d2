#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dreamhop/quadrature.hpp"
#include "dreamhop/spectral_theory.hpp"

namespace dreamhop {

enum class VerifyLevel { Fast, Full };

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::Fast;
  QuadratureOptions quadrature;
  std::uint64_t seed = 2024;
  unsigned threads = 0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::vector<CheckEntry> checks;
  std::string note;
  double seconds = 0.0;
};

// Criterion ids 1..10; see README for the list and tolerances.
CriterionResult run_criterion(int id, const VerifyOptions& options);
// Fast: 1 (reduced), 2, 4, 5, 10. Full: all ten at the documented sizes.
std::vector<int> criteria_for(VerifyLevel level);
std::vector<CriterionResult> run_verification(const VerifyOptions& options);

nlohmann::json to_json(const CriterionResult& r);
nlohmann::json verification_report(const std::vector<CriterionResult>& results, const VerifyOptions& options);

}  // namespace dreamhop
