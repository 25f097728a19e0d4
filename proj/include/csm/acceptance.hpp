#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "csm/stochastic.hpp"

namespace csm {

struct AcceptanceOptions {
  double tol_certify = kTolCertify;
  std::uint64_t seed = 0;
  std::string data_dir;  // bundled data; empty means the build-time default
};

struct CriterionResult {
  int id;
  std::string name;
  bool passed;
  std::string detail;
  double seconds;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

/// One "PASS"/"FAIL" line per criterion and a closing summary line.
void print_acceptance(std::ostream& out, const std::vector<CriterionResult>& results);
nlohmann::json acceptance_to_json(const std::vector<CriterionResult>& results);

/// Directory of the bundled data files.
std::string default_data_dir();

}  // namespace csm
