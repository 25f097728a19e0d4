// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.
#include <iostream>

#include "csm/acceptance.hpp"

int main() {
  const auto results = csm::run_acceptance();
  csm::print_acceptance(std::cout, results);
  for (const auto& r : results)
    if (!r.passed) return 1;
  return 0;
}
