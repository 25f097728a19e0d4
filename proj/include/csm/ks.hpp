#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "csm/matrix_core.hpp"
#include "csm/random.hpp"

namespace csm {

/// Contexts as hyperedges over class ids. Every context has n_outcomes
/// distinct ids, and every id below n_classes occurs somewhere.
struct IncidenceStructure {
  int n_outcomes = 0;
  std::size_t n_classes = 0;
  std::vector<std::vector<std::size_t>> contexts;
};

/// Builds and validates a structure; N and the class count are inferred.
/// Throws ValidationError on an empty list, ragged contexts, a class repeated
/// within a context, or an unused class id.
IncidenceStructure make_structure(std::vector<std::vector<std::size_t>> contexts);
void validate_structure(const IncidenceStructure& s);

/// One context per line, comma-separated class ids, `#` starts a comment.
IncidenceStructure parse_structure_text(std::string_view text);
/// {"n_outcomes": N, "n_classes": K, "contexts": [[...], ...]}; the two counts
/// are optional but checked when present.
IncidenceStructure parse_structure_json(const nlohmann::json& j);
/// JSON if the first non-blank character is '{', text otherwise.
IncidenceStructure parse_structure(std::string_view input);

std::string structure_to_text(const IncidenceStructure& s);
nlohmann::json structure_to_json(const IncidenceStructure& s);

std::vector<std::size_t> class_multiplicities(const IncidenceStructure& s);

struct ParityCertificate {
  std::size_t n_contexts;
  std::vector<std::size_t> multiplicities;
};

/// Every class occurs an even number of times, so any assignment with one
/// true class per context marks an even number of slots; an odd context count
/// makes that impossible.
std::optional<ParityCertificate> parity_check(const IncidenceStructure& s);

/// Truth value per class id.
using Assignment = std::vector<bool>;

/// Exactly one true class per context.
bool satisfies_rules(const IncidenceStructure& s, const Assignment& a);

enum class SearchMode { exhaustive, backtracking };

struct SearchOptions {
  SearchMode mode = SearchMode::backtracking;
  /// Exhaustive: maximum number of assignments (2^n_classes). Backtracking:
  /// maximum number of search nodes.
  std::uint64_t limit = std::uint64_t{1} << 26;
  /// Answer UNSAT from a parity certificate without searching.
  bool parity_shortcut = true;
};

struct SearchStats {
  std::uint64_t nodes = 0;      // assignments tried, or branch nodes
  std::uint64_t solutions = 0;  // exhaustive mode counts every solution
};

struct SearchSat {
  Assignment assignment;
  SearchStats stats;
};

struct SearchUnsat {
  enum class Certificate { parity, exhausted };
  Certificate certificate;
  std::optional<ParityCertificate> parity;
  SearchStats stats;
};

struct SearchIndeterminate {
  std::string reason;
  SearchStats stats;
};

using SearchResult = std::variant<SearchSat, SearchUnsat, SearchIndeterminate>;

/// Exhaustive mode walks assignments as integers (class 0 is the lowest bit)
/// and returns the smallest solution; it needs n_classes ≤ 40. Backtracking
/// branches on the unsatisfied context with the fewest open classes (ties to
/// the lower index) and propagates forced values.
SearchResult search_assignment(const IncidenceStructure& s, const SearchOptions& opts = {});

/// 9 contexts of 4 slots holding 18 classes, each exactly twice and never
/// twice in one context. Ids are numbered by first appearance.
IncidenceStructure generate_cabello_shape(std::uint64_t seed);

/// Random valid structure with N in {2,3,4} and at most max_classes classes,
/// for oracle comparisons.
IncidenceStructure random_structure(CounterRng& rng, std::size_t max_classes = 20);

struct RealizationIssue {
  std::size_t context;
  std::size_t first;   // class ids
  std::size_t second;  // equal to first for a norm issue
  double value;        // |<a|b>| or | ‖a‖ − 1 |
};

struct RealizationReport {
  std::vector<RealizationIssue> issues;
  std::vector<ProjectorFrame> frames;  // one per context, filled on success
  bool passed() const noexcept { return issues.empty(); }
};

/// Checks that each context's vectors are unit and pairwise orthogonal within
/// tol. Throws ValidationError for a missing vector, DimensionError for a
/// vector whose size is not N.
RealizationReport realize_with_vectors(const IncidenceStructure& s, const std::vector<ComplexVector>& vectors,
                                       double tol = 1e-10);

/// {"n": N, "vectors": [[re, ...], ...], "im": [[...], ...]}; "im" is optional.
std::vector<ComplexVector> vectors_from_json(const nlohmann::json& j);

}  // namespace csm
