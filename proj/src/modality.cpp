#include "csm/modality.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace csm {

std::string to_string(const Modality& m) { return "(" + m.context + "," + std::to_string(m.index) + ")"; }

ExtravalenceRegistry::ExtravalenceRegistry(SystemSpec spec) : spec_(spec) {
  if (spec_.n_outcomes < 2) throw ValidationError("a system needs at least 2 outcomes");
}

void ExtravalenceRegistry::register_context(Context ctx) {
  const auto n = static_cast<std::size_t>(spec_.n_outcomes);
  if (ctx.id.empty()) throw ValidationError("context id is empty");
  if (context_index_.contains(ctx.id)) throw ValidationError("duplicate context id \"" + ctx.id + "\"");
  if (ctx.labels.size() != n) {
    throw ValidationError("context \"" + ctx.id + "\" has " + std::to_string(ctx.labels.size()) +
                          " labels, the system has " + std::to_string(n) + " outcomes");
  }
  if (std::set<std::string>(ctx.labels.begin(), ctx.labels.end()).size() != n) {
    throw ValidationError("context \"" + ctx.id + "\" repeats a label");
  }
  if (ctx.frame && static_cast<std::size_t>(ctx.frame->dim()) != n) {
    throw ValidationError("context \"" + ctx.id + "\" frame has dimension " + std::to_string(ctx.frame->dim()));
  }

  const std::size_t k = contexts_.size();
  context_index_.emplace(ctx.id, k);
  contexts_.push_back(std::move(ctx));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t key = k * n + i;
    parent_.push_back(key);
    size_.push_back(1);
    min_key_.push_back(key);
    root_contexts_.push_back({k});
  }
  class_count_ += n;
}

std::size_t ExtravalenceRegistry::key_of(const Modality& m) const {
  const auto it = context_index_.find(m.context);
  if (it == context_index_.end()) throw ValidationError("unregistered context \"" + m.context + "\"");
  if (m.index >= static_cast<std::size_t>(spec_.n_outcomes)) {
    throw ValidationError("outcome index " + std::to_string(m.index) + " out of range for context \"" +
                          m.context + "\"");
  }
  return it->second * static_cast<std::size_t>(spec_.n_outcomes) + m.index;
}

Modality ExtravalenceRegistry::modality_of(std::size_t key) const {
  const auto n = static_cast<std::size_t>(spec_.n_outcomes);
  return {contexts_[key / n].id, key % n};
}

std::size_t ExtravalenceRegistry::find(std::size_t key) const {
  while (parent_[key] != key) key = parent_[key];
  return key;
}

bool ExtravalenceRegistry::contains(const Modality& m) const {
  return context_index_.contains(m.context) && m.index < static_cast<std::size_t>(spec_.n_outcomes);
}

void ExtravalenceRegistry::link_certain(const Modality& a, const Modality& b) {
  auto ra = find(key_of(a));
  auto rb = find(key_of(b));
  if (ra == rb) return;

  std::vector<std::size_t> merged;
  std::set_union(root_contexts_[ra].begin(), root_contexts_[ra].end(), root_contexts_[rb].begin(),
                 root_contexts_[rb].end(), std::back_inserter(merged));
  if (merged.size() != root_contexts_[ra].size() + root_contexts_[rb].size()) {
    std::vector<std::size_t> common;
    std::set_intersection(root_contexts_[ra].begin(), root_contexts_[ra].end(), root_contexts_[rb].begin(),
                          root_contexts_[rb].end(), std::back_inserter(common));
    throw ExclusivityError("linking " + to_string(a) + " with " + to_string(b) +
                           " would put two modalities of context \"" + contexts_[common.front()].id +
                           "\" in one class");
  }

  if (size_[ra] < size_[rb]) std::swap(ra, rb);
  parent_[rb] = ra;
  size_[ra] += size_[rb];
  min_key_[ra] = std::min(min_key_[ra], min_key_[rb]);
  root_contexts_[ra] = std::move(merged);
  root_contexts_[rb].clear();
  --class_count_;
  links_.emplace_back(a, b);
}

ClassId ExtravalenceRegistry::class_of(const Modality& m) const { return min_key_[find(key_of(m))]; }

std::vector<Modality> ExtravalenceRegistry::members(ClassId id) const {
  if (id >= parent_.size()) throw ValidationError("unknown class id " + std::to_string(id));
  const auto root = find(id);
  if (min_key_[root] != id) throw ValidationError("unknown class id " + std::to_string(id));
  std::vector<Modality> out;
  for (std::size_t key = 0; key < parent_.size(); ++key) {
    if (find(key) == root) out.push_back(modality_of(key));
  }
  return out;
}

std::vector<std::vector<Modality>> ExtravalenceRegistry::classes() const {
  std::map<ClassId, std::vector<Modality>> by_id;
  for (std::size_t key = 0; key < parent_.size(); ++key) by_id[min_key_[find(key)]].push_back(modality_of(key));
  std::vector<std::vector<Modality>> out;
  out.reserve(by_id.size());
  for (auto& [id, ms] : by_id) out.push_back(std::move(ms));
  return out;
}

const Context& ExtravalenceRegistry::context(const std::string& id) const {
  const auto it = context_index_.find(id);
  if (it == context_index_.end()) throw ValidationError("unregistered context \"" + id + "\"");
  return contexts_[it->second];
}

bool ExtravalenceRegistry::exclusivity_holds() const {
  const auto n = static_cast<std::size_t>(spec_.n_outcomes);
  std::set<std::pair<std::size_t, std::size_t>> seen;  // (root, context)
  for (std::size_t key = 0; key < parent_.size(); ++key) {
    if (!seen.emplace(find(key), key / n).second) return false;
  }
  return true;
}

RuleIReport validate_rule_I(const std::vector<std::vector<double>>& prob_rows, double tol) {
  RuleIReport report;
  for (std::size_t r = 0; r < prob_rows.size(); ++r) {
    const auto& row = prob_rows[r];
    double sum = 0.0;
    for (double p : row) sum += p;
    const bool sum_broken = !(std::abs(sum - 1.0) <= tol);
    bool excl_broken = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] < 1.0 - tol) continue;
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k != i && row[k] > tol) excl_broken = true;
      }
    }
    if (sum_broken || excl_broken) report.violations.push_back({r, sum, sum_broken, excl_broken});
  }
  return report;
}

RuleIIReport validate_rule_II(const ExtravalenceRegistry& reg, const std::vector<Observation>& observations,
                              double tol) {
  struct Range {
    double lo, hi;
    std::size_t count;
  };
  std::map<std::pair<ClassId, ClassId>, Range> groups;
  for (const auto& o : observations) {
    const auto key = std::make_pair(reg.class_of(o.initial), reg.class_of(o.final));
    auto [it, fresh] = groups.try_emplace(key, Range{o.probability, o.probability, 0});
    it->second.lo = std::min(it->second.lo, o.probability);
    it->second.hi = std::max(it->second.hi, o.probability);
    ++it->second.count;
  }
  RuleIIReport report;
  report.class_pairs = groups.size();
  for (const auto& [key, r] : groups) {
    if (r.hi - r.lo > tol) report.violations.push_back({key.first, key.second, r.lo, r.hi, r.count});
  }
  return report;
}

double two_sided_critical_z(double significance) {
  if (!(significance > 0.0 && significance < 1.0)) throw PreconditionError("significance must lie in (0, 1)");
  // P(|Z| > z) = erfc(z/√2), decreasing in z.
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > significance) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

RuleIIStatisticalReport validate_rule_II_statistical(const ExtravalenceRegistry& reg,
                                                     const std::vector<FrequencyObservation>& observations,
                                                     double significance) {
  RuleIIStatisticalReport report;
  report.z_critical = two_sided_critical_z(significance);
  std::map<std::pair<ClassId, ClassId>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const auto& o = observations[k];
    if (o.trials == 0 || o.hits > o.trials) throw PreconditionError("observation needs 0 <= hits <= trials, trials > 0");
    groups[{reg.class_of(o.initial), reg.class_of(o.final)}].push_back(k);
  }
  report.class_pairs = groups.size();
  for (const auto& [key, idx] : groups) {
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        const auto& x = observations[idx[a]];
        const auto& y = observations[idx[b]];
        const double nx = static_cast<double>(x.trials), ny = static_cast<double>(y.trials);
        const double px = static_cast<double>(x.hits) / nx, py = static_cast<double>(y.hits) / ny;
        const double pooled = static_cast<double>(x.hits + y.hits) / (nx + ny);
        const double var = pooled * (1.0 - pooled) * (1.0 / nx + 1.0 / ny);
        double z = 0.0;
        if (var > 0.0) z = (px - py) / std::sqrt(var);
        if (std::abs(z) > report.z_critical) {
          report.violations.push_back({key.first, key.second, idx[a], idx[b], z});
        }
      }
    }
  }
  return report;
}

TransitionMatrix transition_between(const ExtravalenceRegistry& reg, const std::string& c1, const std::string& c2,
                                    const ClassProbability& class_prob) {
  const auto n = static_cast<Eigen::Index>(reg.spec().n_outcomes);
  reg.context(c1);
  reg.context(c2);
  RealMatrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ClassId from = reg.class_of({c1, static_cast<std::size_t>(i)});
    for (Eigen::Index j = 0; j < n; ++j) {
      p(j, i) = class_prob(from, reg.class_of({c2, static_cast<std::size_t>(j)}));
    }
  }
  return validate_stochastic(p);
}

ClassProbability born_class_probability(const ExtravalenceRegistry& reg) {
  return [&reg](ClassId from, ClassId to) {
    auto projector = [&reg](ClassId id) -> const Projector& {
      for (const auto& m : reg.members(id)) {
        const auto& ctx = reg.context(m.context);
        if (ctx.frame) return (*ctx.frame)[m.index];
      }
      throw PreconditionError("class " + std::to_string(id) + " has no member with a projector frame");
    };
    return born_probability(projector(from), projector(to));
  };
}

ExtravalenceRegistry registry_from_json(const nlohmann::json& j) {
  try {
    ExtravalenceRegistry reg(SystemSpec{j.at("n").get<int>()});
    for (const auto& c : j.at("contexts")) {
      reg.register_context(Context{c.at("id").get<std::string>(), c.at("labels").get<std::vector<std::string>>(),
                                   std::nullopt});
    }
    if (j.contains("links")) {
      for (const auto& link : j.at("links")) {
        if (!link.is_array() || link.size() != 2) throw ParseError("a link must be a pair of modalities");
        auto mod = [](const nlohmann::json& m) {
          if (!m.is_array() || m.size() != 2) throw ParseError("a modality must be [context, index]");
          return Modality{m[0].get<std::string>(), m[1].get<std::size_t>()};
        };
        reg.link_certain(mod(link[0]), mod(link[1]));
      }
    }
    return reg;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("registry JSON: ") + e.what());
  }
}

nlohmann::json registry_to_json(const ExtravalenceRegistry& reg) {
  nlohmann::json contexts = nlohmann::json::array();
  for (const auto& c : reg.contexts()) contexts.push_back({{"id", c.id}, {"labels", c.labels}});
  nlohmann::json links = nlohmann::json::array();
  for (const auto& [a, b] : reg.links()) {
    links.push_back(nlohmann::json::array({nlohmann::json::array({a.context, a.index}),
                                           nlohmann::json::array({b.context, b.index})}));
  }
  return {{"n", reg.spec().n_outcomes}, {"contexts", std::move(contexts)}, {"links", std::move(links)}};
}

}  // namespace csm
