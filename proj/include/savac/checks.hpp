#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace savac {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Small-instance consistency suite behind `savac check`: dense-oracle
/// equivalence, the r-update identity d = c/2, deterministic energy decay,
/// pure-phase fixed points, discrete integration by parts and exact noise
/// coarsening.
std::vector<CheckResult> run_self_checks(std::uint64_t seed);

}  // namespace savac
