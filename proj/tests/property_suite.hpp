#pragma once

#include <string>
#include <vector>

namespace mixdendro::testing {

struct PropertyResult {
  std::string name;
  bool passed;
  std::string detail;
};

/// Randomized checks of the module invariants with fixed seeds. Shared by
/// the acceptance binary and the unit suites.
std::vector<PropertyResult> run_property_suite();

}  // namespace mixdendro::testing
