#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "csm/matrix_core.hpp"
#include "csm/stochastic.hpp"

namespace csm {

inline constexpr double kTolRuleII = 1e-9;

/// Number of mutually exclusive outcomes, the same in every context.
struct SystemSpec {
  int n_outcomes = 2;
};

/// A measurement context: N distinct outcome labels, optionally realized by a
/// projector frame.
struct Context {
  std::string id;
  std::vector<std::string> labels;
  std::optional<ProjectorFrame> frame;
};

/// Outcome `index` of context `context`.
struct Modality {
  std::string context;
  std::size_t index = 0;

  auto operator<=>(const Modality&) const = default;
};

std::string to_string(const Modality& m);

/// Canonical class id: the smallest member key, where the key of outcome i of
/// the k-th registered context is k·N + i.
using ClassId = std::size_t;

/// Two modalities of one context would end up in the same class.
class ExclusivityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Partition of registered modalities into extravalence classes, built from
/// certainty links only. Mutations are single-writer; const members never
/// modify state.
class ExtravalenceRegistry {
 public:
  explicit ExtravalenceRegistry(SystemSpec spec);

  const SystemSpec& spec() const noexcept { return spec_; }

  /// Adds N singleton classes. Throws ValidationError on a duplicate id, a
  /// wrong label count, repeated labels or a frame of the wrong dimension.
  void register_context(Context ctx);

  /// Merges the classes of a and b. Linking a modality to itself is a no-op.
  /// Throws ExclusivityError if the merged class would hold two modalities of
  /// the same context, leaving the registry unchanged.
  void link_certain(const Modality& a, const Modality& b);

  ClassId class_of(const Modality& m) const;
  std::vector<Modality> members(ClassId id) const;
  /// All classes, ordered by id, members ordered by key.
  std::vector<std::vector<Modality>> classes() const;

  std::size_t context_count() const noexcept { return contexts_.size(); }
  std::size_t modality_count() const noexcept { return parent_.size(); }
  std::size_t class_count() const noexcept { return class_count_; }

  const Context& context(const std::string& id) const;
  const std::vector<Context>& contexts() const noexcept { return contexts_; }
  bool contains(const Modality& m) const;

  /// Links accepted so far, in order.
  const std::vector<std::pair<Modality, Modality>>& links() const noexcept { return links_; }

  /// Recomputes the exclusivity invariant from scratch.
  bool exclusivity_holds() const;

 private:
  std::size_t key_of(const Modality& m) const;
  Modality modality_of(std::size_t key) const;
  std::size_t find(std::size_t key) const;

  SystemSpec spec_;
  std::vector<Context> contexts_;
  std::map<std::string, std::size_t, std::less<>> context_index_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> min_key_;                    // valid at roots
  std::vector<std::vector<std::size_t>> root_contexts_;  // sorted, valid at roots
  std::vector<std::pair<Modality, Modality>> links_;
  std::size_t class_count_ = 0;
};

struct RuleIViolation {
  std::size_t row;
  double sum;
  bool sum_broken;
  bool exclusivity_broken;  // one entry is certain but another is not zero
};

struct RuleIReport {
  std::vector<RuleIViolation> violations;
  bool passed() const noexcept { return violations.empty(); }
};

/// Each row sums to 1 within tol, and a certain entry (≥ 1 − tol) forces all
/// others ≤ tol.
RuleIReport validate_rule_I(const std::vector<std::vector<double>>& prob_rows, double tol = kTolRuleII);

struct Observation {
  Modality initial;
  Modality final;
  double probability;
};

struct ClassPairViolation {
  ClassId initial;
  ClassId final;
  double min_probability;
  double max_probability;
  std::size_t observations;
};

struct RuleIIReport {
  std::size_t class_pairs = 0;
  std::vector<ClassPairViolation> violations;
  bool passed() const noexcept { return violations.empty(); }
};

/// Groups observations by (class of initial, class of final) and requires
/// max − min ≤ tol within each group.
RuleIIReport validate_rule_II(const ExtravalenceRegistry& reg, const std::vector<Observation>& observations,
                              double tol = kTolRuleII);

struct FrequencyObservation {
  Modality initial;
  Modality final;
  std::uint64_t hits;
  std::uint64_t trials;
};

struct StatisticalViolation {
  ClassId initial;
  ClassId final;
  std::size_t first;   // indices into the observation list
  std::size_t second;
  double z;
};

struct RuleIIStatisticalReport {
  double z_critical = 0.0;
  std::size_t class_pairs = 0;
  std::vector<StatisticalViolation> violations;
  bool passed() const noexcept { return violations.empty(); }
};

/// Two-sided critical value z with P(|Z| > z) = significance.
double two_sided_critical_z(double significance);

/// Empirical variant: within each class pair, every two observations must pass
/// a pooled two-proportion z-test at the given significance.
RuleIIStatisticalReport validate_rule_II_statistical(const ExtravalenceRegistry& reg,
                                                     const std::vector<FrequencyObservation>& observations,
                                                     double significance = 1e-3);

using ClassProbability = std::function<double(ClassId initial, ClassId final)>;

/// Entry (j, i) = class_prob(class_of(c1, i), class_of(c2, j)), validated as
/// column-stochastic.
TransitionMatrix transition_between(const ExtravalenceRegistry& reg, const std::string& c1, const std::string& c2,
                                    const ClassProbability& class_prob);

/// Born probabilities between the projectors attached to the two classes'
/// contexts. Every context involved must carry a frame.
ClassProbability born_class_probability(const ExtravalenceRegistry& reg);

// {"n": N, "contexts": [{"id": .., "labels": [..]}], "links": [[[ctx, idx], [ctx, idx]], ..]}
ExtravalenceRegistry registry_from_json(const nlohmann::json& j);
nlohmann::json registry_to_json(const ExtravalenceRegistry& reg);

}  // namespace csm
