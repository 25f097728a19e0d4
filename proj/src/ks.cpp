#include "csm/ks.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <numeric>
#include <sstream>

namespace csm {

void validate_structure(const IncidenceStructure& s) {
  if (s.contexts.empty()) throw ValidationError("structure has no contexts");
  if (s.n_outcomes < 1) throw ValidationError("contexts must have at least one slot");
  std::vector<bool> used(s.n_classes, false);
  for (std::size_t k = 0; k < s.contexts.size(); ++k) {
    const auto& ctx = s.contexts[k];
    if (ctx.size() != static_cast<std::size_t>(s.n_outcomes)) {
      throw ValidationError("context " + std::to_string(k) + " has " + std::to_string(ctx.size()) +
                            " classes, expected " + std::to_string(s.n_outcomes));
    }
    for (std::size_t a = 0; a < ctx.size(); ++a) {
      if (ctx[a] >= s.n_classes) {
        throw ValidationError("context " + std::to_string(k) + " names class " + std::to_string(ctx[a]) +
                              " but there are " + std::to_string(s.n_classes));
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (ctx[a] == ctx[b]) {
          throw ValidationError("duplicate class " + std::to_string(ctx[a]) + " in context " + std::to_string(k));
        }
      }
      used[ctx[a]] = true;
    }
  }
  const auto unused = std::find(used.begin(), used.end(), false);
  if (unused != used.end()) {
    throw ValidationError("class " + std::to_string(unused - used.begin()) + " appears in no context");
  }
}

IncidenceStructure make_structure(std::vector<std::vector<std::size_t>> contexts) {
  IncidenceStructure s;
  if (contexts.empty()) throw ValidationError("structure has no contexts");
  s.n_outcomes = static_cast<int>(contexts.front().size());
  for (const auto& c : contexts)
    for (auto id : c) s.n_classes = std::max(s.n_classes, id + 1);
  s.contexts = std::move(contexts);
  validate_structure(s);
  return s;
}

IncidenceStructure parse_structure_text(std::string_view text) {
  std::vector<std::vector<std::size_t>> contexts;
  std::size_t width = 0;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    std::vector<std::size_t> ctx;
    std::size_t start = 0;
    while (true) {
      const auto comma = std::min(line.find(',', start), line.size());
      auto tok = line.substr(start, comma - start);
      const auto lead = tok.find_first_not_of(" \t\r");
      const int column = static_cast<int>(start + (lead == std::string_view::npos ? 0 : lead)) + 1;
      if (lead == std::string_view::npos) throw ParseError("empty class id", line_no, column);
      tok = tok.substr(lead, tok.find_last_not_of(" \t\r") - lead + 1);
      std::size_t id = 0;
      const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (ec != std::errc{} || end != tok.data() + tok.size()) {
        throw ParseError("expected a class id, got \"" + std::string(tok) + "\"", line_no, column);
      }
      if (std::find(ctx.begin(), ctx.end(), id) != ctx.end()) {
        throw ParseError("duplicate class " + std::to_string(id) + " in context", line_no, column);
      }
      ctx.push_back(id);
      if (comma == line.size()) break;
      start = comma + 1;
    }
    if (contexts.empty()) {
      width = ctx.size();
    } else if (ctx.size() != width) {
      throw ParseError("context has " + std::to_string(ctx.size()) + " classes, expected " + std::to_string(width),
                       line_no);
    }
    contexts.push_back(std::move(ctx));
  }
  return make_structure(std::move(contexts));
}

IncidenceStructure parse_structure_json(const nlohmann::json& j) {
  IncidenceStructure s;
  try {
    s = make_structure(j.at("contexts").get<std::vector<std::vector<std::size_t>>>());
    if (j.contains("n_outcomes") && j.at("n_outcomes").get<int>() != s.n_outcomes) {
      throw ValidationError("n_outcomes does not match the context length");
    }
    if (j.contains("n_classes")) {
      const auto k = j.at("n_classes").get<std::size_t>();
      if (k != s.n_classes) throw ValidationError("n_classes " + std::to_string(k) + " but ids span " +
                                                  std::to_string(s.n_classes));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("structure JSON: ") + e.what());
  }
  return s;
}

IncidenceStructure parse_structure(std::string_view input) {
  const auto first = input.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && input[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("structure JSON: ") + e.what());
    }
    return parse_structure_json(j);
  }
  return parse_structure_text(input);
}

std::string structure_to_text(const IncidenceStructure& s) {
  std::ostringstream out;
  for (const auto& ctx : s.contexts) {
    for (std::size_t i = 0; i < ctx.size(); ++i) out << (i ? "," : "") << ctx[i];
    out << '\n';
  }
  return out.str();
}

nlohmann::json structure_to_json(const IncidenceStructure& s) {
  return {{"n_outcomes", s.n_outcomes}, {"n_classes", s.n_classes}, {"contexts", s.contexts}};
}

std::vector<std::size_t> class_multiplicities(const IncidenceStructure& s) {
  std::vector<std::size_t> m(s.n_classes, 0);
  for (const auto& ctx : s.contexts)
    for (auto id : ctx) ++m[id];
  return m;
}

std::optional<ParityCertificate> parity_check(const IncidenceStructure& s) {
  if (s.contexts.size() % 2 == 0) return std::nullopt;
  auto m = class_multiplicities(s);
  if (std::any_of(m.begin(), m.end(), [](std::size_t x) { return x % 2 != 0; })) return std::nullopt;
  return ParityCertificate{s.contexts.size(), std::move(m)};
}

bool satisfies_rules(const IncidenceStructure& s, const Assignment& a) {
  if (a.size() != s.n_classes) return false;
  for (const auto& ctx : s.contexts) {
    if (std::count_if(ctx.begin(), ctx.end(), [&](std::size_t id) { return a[id]; }) != 1) return false;
  }
  return true;
}

namespace {

SearchResult exhaustive(const IncidenceStructure& s, const SearchOptions& opts) {
  if (s.n_classes > 40) {
    throw PreconditionError("exhaustive search supports at most 40 classes, got " + std::to_string(s.n_classes));
  }
  const std::uint64_t total = std::uint64_t{1} << s.n_classes;
  SearchStats stats;
  if (total > opts.limit) {
    return SearchIndeterminate{"exhaustive search needs 2^" + std::to_string(s.n_classes) +
                                   " assignments, above the limit of " + std::to_string(opts.limit),
                               stats};
  }
  std::vector<std::uint64_t> masks;
  for (const auto& ctx : s.contexts) {
    std::uint64_t m = 0;
    for (auto id : ctx) m |= std::uint64_t{1} << id;
    masks.push_back(m);
  }
  std::optional<std::uint64_t> first;
  for (std::uint64_t a = 0; a < total; ++a) {
    bool ok = true;
    for (auto m : masks) {
      if (std::popcount(a & m) != 1) {
        ok = false;
        break;
      }
    }
    if (ok) {
      ++stats.solutions;
      if (!first) first = a;
    }
  }
  stats.nodes = total;
  if (!first) return SearchUnsat{SearchUnsat::Certificate::exhausted, std::nullopt, stats};
  Assignment out(s.n_classes);
  for (std::size_t c = 0; c < s.n_classes; ++c) out[c] = ((*first >> c) & 1U) != 0;
  return SearchSat{std::move(out), stats};
}

class Backtracker {
 public:
  Backtracker(const IncidenceStructure& s, std::uint64_t limit)
      : s_(s), limit_(limit), value_(s.n_classes, -1), contexts_of_(s.n_classes) {
    for (std::size_t k = 0; k < s.contexts.size(); ++k)
      for (auto id : s.contexts[k]) contexts_of_[id].push_back(k);
  }

  // 1 = found, 0 = none, -1 = node limit hit.
  int run() { return solve(); }
  Assignment assignment() const {
    Assignment a(value_.size());
    for (std::size_t c = 0; c < value_.size(); ++c) a[c] = value_[c] == 1;
    return a;
  }
  std::uint64_t nodes() const { return nodes_; }

 private:
  bool assign(std::size_t cls, std::int8_t v) {
    std::vector<std::pair<std::size_t, std::int8_t>> queue{{cls, v}};
    while (!queue.empty()) {
      const auto [c, val] = queue.back();
      queue.pop_back();
      if (value_[c] == val) continue;
      if (value_[c] != -1) return false;
      value_[c] = val;
      trail_.push_back(c);
      for (auto k : contexts_of_[c]) {
        int trues = 0, open = 0;
        std::size_t last_open = 0;
        for (auto d : s_.contexts[k]) {
          if (value_[d] == 1) ++trues;
          if (value_[d] == -1) {
            ++open;
            last_open = d;
          }
        }
        if (trues > 1 || (trues == 0 && open == 0)) return false;
        if (trues == 1) {
          for (auto d : s_.contexts[k])
            if (value_[d] == -1) queue.emplace_back(d, 0);
        } else if (open == 1) {
          queue.emplace_back(last_open, 1);
        }
      }
    }
    return true;
  }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      value_[trail_.back()] = -1;
      trail_.pop_back();
    }
  }

  int solve() {
    if (++nodes_ > limit_) return -1;
    std::size_t best = s_.contexts.size();
    int best_open = 0;
    for (std::size_t k = 0; k < s_.contexts.size(); ++k) {
      int trues = 0, open = 0;
      for (auto d : s_.contexts[k]) {
        trues += value_[d] == 1;
        open += value_[d] == -1;
      }
      if (trues == 0 && (best == s_.contexts.size() || open < best_open)) {
        best = k;
        best_open = open;
      }
    }
    if (best == s_.contexts.size()) {
      for (auto& v : value_)
        if (v == -1) v = 0;
      return 1;
    }
    // Binary branch on the first open class: true, then false.
    std::size_t c = 0;
    for (auto d : s_.contexts[best]) {
      if (value_[d] == -1) {
        c = d;
        break;
      }
    }
    const std::size_t mark = trail_.size();
    for (std::int8_t v : {std::int8_t{1}, std::int8_t{0}}) {
      if (assign(c, v)) {
        const int r = solve();
        if (r != 0) return r;
      }
      undo(mark);
    }
    return 0;
  }

  const IncidenceStructure& s_;
  std::uint64_t limit_;
  std::uint64_t nodes_ = 0;
  std::vector<std::int8_t> value_;
  std::vector<std::vector<std::size_t>> contexts_of_;
  std::vector<std::size_t> trail_;
};

}  // namespace

SearchResult search_assignment(const IncidenceStructure& s, const SearchOptions& opts) {
  validate_structure(s);
  if (opts.parity_shortcut) {
    if (auto cert = parity_check(s)) return SearchUnsat{SearchUnsat::Certificate::parity, std::move(cert), {}};
  }
  if (opts.mode == SearchMode::exhaustive) return exhaustive(s, opts);

  Backtracker bt(s, opts.limit);
  const int r = bt.run();
  SearchStats stats{bt.nodes(), 0};
  if (r < 0) {
    return SearchIndeterminate{"backtracking stopped after " + std::to_string(opts.limit) + " nodes", stats};
  }
  if (r == 0) return SearchUnsat{SearchUnsat::Certificate::exhausted, std::nullopt, stats};
  stats.solutions = 1;
  return SearchSat{bt.assignment(), stats};
}

namespace {

// Renumbers ids by first appearance, scanning contexts in order.
void relabel(std::vector<std::vector<std::size_t>>& contexts) {
  std::vector<std::size_t> map;
  std::vector<std::size_t> seen;
  for (auto& ctx : contexts) {
    for (auto& id : ctx) {
      if (id >= map.size()) map.resize(id + 1, SIZE_MAX);
      if (map[id] == SIZE_MAX) map[id] = seen.size(), seen.push_back(id);
      id = map[id];
    }
  }
}

}  // namespace

IncidenceStructure generate_cabello_shape(std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<std::size_t> slots;
  for (std::size_t c = 0; c < 18; ++c) slots.insert(slots.end(), {c, c});
  while (true) {
    shuffle(slots, rng);
    std::vector<std::vector<std::size_t>> contexts(9);
    bool ok = true;
    for (std::size_t k = 0; k < 9 && ok; ++k) {
      contexts[k].assign(slots.begin() + static_cast<std::ptrdiff_t>(4 * k),
                         slots.begin() + static_cast<std::ptrdiff_t>(4 * k + 4));
      for (std::size_t a = 0; a < 4 && ok; ++a)
        for (std::size_t b = 0; b < a; ++b)
          if (contexts[k][a] == contexts[k][b]) ok = false;
    }
    if (!ok) continue;
    relabel(contexts);
    return make_structure(std::move(contexts));
  }
}

IncidenceStructure random_structure(CounterRng& rng, std::size_t max_classes) {
  if (max_classes < 2) throw PreconditionError("random_structure needs max_classes >= 2");
  const std::size_t n = 2 + rng.below(std::min<std::size_t>(3, max_classes - 1));
  const std::size_t pool = n + rng.below(max_classes - n + 1);
  const std::size_t count = 1 + rng.below(8);
  std::vector<std::size_t> ids(pool);
  std::vector<std::vector<std::size_t>> contexts;
  for (std::size_t k = 0; k < count; ++k) {
    std::iota(ids.begin(), ids.end(), 0);
    shuffle(ids, rng);
    contexts.emplace_back(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
  }
  relabel(contexts);
  return make_structure(std::move(contexts));
}

RealizationReport realize_with_vectors(const IncidenceStructure& s, const std::vector<ComplexVector>& vectors,
                                       double tol) {
  validate_structure(s);
  if (vectors.size() < s.n_classes) {
    throw ValidationError("missing vector for class " + std::to_string(vectors.size()));
  }
  for (std::size_t c = 0; c < s.n_classes; ++c) {
    if (vectors[c].size() != s.n_outcomes) {
      throw DimensionError("vector for class " + std::to_string(c) + " has dimension " +
                           std::to_string(vectors[c].size()) + ", expected " + std::to_string(s.n_outcomes));
    }
    require_finite(vectors[c], "realization vector");
  }
  RealizationReport report;
  for (std::size_t k = 0; k < s.contexts.size(); ++k) {
    const auto& ctx = s.contexts[k];
    for (std::size_t a = 0; a < ctx.size(); ++a) {
      const double off = std::abs(vectors[ctx[a]].norm() - 1.0);
      if (off > tol) report.issues.push_back({k, ctx[a], ctx[a], off});
      for (std::size_t b = 0; b < a; ++b) {
        const double overlap = std::abs(vectors[ctx[b]].dot(vectors[ctx[a]]));
        if (overlap > tol) report.issues.push_back({k, ctx[b], ctx[a], overlap});
      }
    }
  }
  if (!report.passed()) return report;
  for (const auto& ctx : s.contexts) {
    std::vector<Projector> ps;
    for (auto id : ctx) ps.push_back(projector_from_vector(vectors[id]));
    report.frames.emplace_back(std::move(ps));
  }
  return report;
}

std::vector<ComplexVector> vectors_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<Eigen::Index>();
    const auto re = j.at("vectors").get<std::vector<std::vector<double>>>();
    std::vector<std::vector<double>> im;
    if (j.contains("im")) im = j.at("im").get<std::vector<std::vector<double>>>();
    if (!im.empty() && im.size() != re.size()) throw ParseError("\"im\" must have one row per vector");
    std::vector<ComplexVector> out;
    for (std::size_t k = 0; k < re.size(); ++k) {
      if (static_cast<Eigen::Index>(re[k].size()) != n || (!im.empty() && im[k].size() != re[k].size())) {
        throw ParseError("vector " + std::to_string(k) + " does not have " + std::to_string(n) + " entries");
      }
      ComplexVector v(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        v(i) = Complex(re[k][u], im.empty() ? 0.0 : im[k][u]);
      }
      out.push_back(std::move(v));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("vector JSON: ") + e.what());
  }
}

}  // namespace csm
