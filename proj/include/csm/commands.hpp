#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csm/ks.hpp"
#include "csm/stochastic.hpp"

// Subcommand bodies behind the `csm` executable. Each returns the process exit
// code and writes only to the streams it is given. Input path "-" reads `in`.
namespace csm {

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;  // unreadable, malformed or invalid input

/// Reads a file, or all of `in` for "-". Throws Error if the file cannot be
/// opened.
std::string read_input(const std::string& path, std::istream& in);

/// Prints frames, R, constraint residuals and reconstruction error as JSON.
/// 0 on success, 2 on any input problem.
int cmd_decompose(const std::string& input, Streams io);

struct CertifyCommandOptions {
  std::string input;
  std::uint64_t seed = 0;
  double tol = kTolCertify;
  int restarts = 32;
};

inline constexpr int kExitCertified = 0;
inline constexpr int kExitRefuted = 1;
inline constexpr int kExitNotCertified = 3;

/// 0 certified, 1 refuted, 3 not certified, 2 on input problems.
int cmd_certify(const CertifyCommandOptions& opts, Streams io);

struct KsCommandOptions {
  std::optional<std::string> input;
  std::optional<std::uint64_t> generate_seed;  // used when input is empty
  SearchMode mode = SearchMode::backtracking;
  std::uint64_t limit = std::uint64_t{1} << 26;
  bool parity_shortcut = true;
};

inline constexpr int kExitSat = 0;
inline constexpr int kExitUnsat = 1;
inline constexpr int kExitIndeterminate = 2;

/// 0 SAT, 1 UNSAT, 2 indeterminate or unusable input.
int cmd_ks(const KsCommandOptions& opts, Streams io);

struct SimulateCommandOptions {
  std::string input;
  std::optional<std::uint64_t> seed;   // overrides the config
  std::optional<std::uint64_t> shots;  // overrides the config
  bool json = false;                   // JSON summary instead of CSV
};

int cmd_simulate(const SimulateCommandOptions& opts, Streams io);

struct BellCommandOptions {
  /// Four axes a, a′, b, b′, each either one angle in degrees (x–z plane) or a
  /// comma-separated 3-vector.
  std::vector<std::string> directions = {"0", "90", "45", "135"};
};

int cmd_bell(const BellCommandOptions& opts, Streams io);

struct SelftestCommandOptions {
  bool json = false;
  double tol_certify = kTolCertify;
  std::uint64_t seed = 0;
};

/// Runs the acceptance criteria; 0 if all pass, 1 otherwise.
int cmd_selftest(const SelftestCommandOptions& opts, Streams io);

}  // namespace csm
