#include "csm/commands.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "csm/acceptance.hpp"
#include "csm/interferometer.hpp"
#include "csm/spin_pair.hpp"

namespace csm {

std::string read_input(const std::string& path, std::istream& in) {
  std::ostringstream ss;
  if (path == "-") {
    ss << in.rdbuf();
    return ss.str();
  }
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open " + path);
  ss << file.rdbuf();
  return ss.str();
}

namespace {

nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
}

template <class F>
int guarded(Streams io, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

void emit(std::ostream& out, const nlohmann::json& j) { out << j.dump(2) << '\n'; }

}  // namespace

int cmd_decompose(const std::string& input, Streams io) {
  return guarded(io, [&] {
    const auto pi = transition_from_json(parse_json(read_input(input, io.in)));
    const auto dec = lemma1_decompose(pi);
    const auto res = constraint_residuals(dec);
    const RealMatrix back = lemma1_reconstruct_entries(dec);

    nlohmann::json initial = nlohmann::json::array(), final_ = nlohmann::json::array();
    for (const auto& p : dec.frame_initial) initial.push_back(matrix_to_json(p.matrix()));
    for (const auto& p : dec.frame_final) final_.push_back(matrix_to_json(p.matrix()));
    const auto& r = dec.r.values();
    emit(io.out, {{"n", pi.dim()},
                  {"r", std::vector<double>(r.data(), r.data() + r.size())},
                  {"frame_initial", initial},
                  {"frame_final", final_},
                  {"constraint_residuals",
                   {{"trace_r2_minus_n", res.trace_r2_minus_n}, {"per_projector", res.per_projector}}},
                  {"reconstruction_error", (back - pi.matrix()).cwiseAbs().maxCoeff()}});
    return kExitOk;
  });
}

int cmd_certify(const CertifyCommandOptions& opts, Streams io) {
  return guarded(io, [&] {
    const auto pi = transition_from_json(parse_json(read_input(opts.input, io.in)));
    CertifyOptions co;
    co.seed = opts.seed;
    co.tol_certify = opts.tol;
    co.restarts = opts.restarts;
    const auto result = certify_unistochastic(pi, co);
    emit(io.out, certify_result_to_json(result, opts.seed));
    if (std::holds_alternative<UnistochasticCertificate>(result)) return kExitCertified;
    if (std::holds_alternative<Refuted>(result)) return kExitRefuted;
    return kExitNotCertified;
  });
}

int cmd_ks(const KsCommandOptions& opts, Streams io) {
  return guarded(io, [&] {
    IncidenceStructure s;
    if (opts.input) {
      s = parse_structure(read_input(*opts.input, io.in));
    } else if (opts.generate_seed) {
      s = generate_cabello_shape(*opts.generate_seed);
    } else {
      throw PreconditionError("ks needs an input file or a generator seed");
    }

    nlohmann::json report = structure_to_json(s);
    report["n_contexts"] = s.contexts.size();
    report["mode"] = opts.mode == SearchMode::exhaustive ? "exhaustive" : "backtracking";
    const auto cert = parity_check(s);
    report["parity"] = cert ? nlohmann::json{{"n_contexts", cert->n_contexts},
                                             {"multiplicities", cert->multiplicities}}
                            : nlohmann::json(nullptr);

    const auto result = search_assignment(s, {opts.mode, opts.limit, opts.parity_shortcut});
    int code = kExitIndeterminate;
    SearchStats stats;
    if (const auto* sat = std::get_if<SearchSat>(&result)) {
      std::vector<std::size_t> true_classes;
      for (std::size_t c = 0; c < sat->assignment.size(); ++c)
        if (sat->assignment[c]) true_classes.push_back(c);
      report["status"] = "sat";
      report["true_classes"] = true_classes;
      stats = sat->stats;
      code = kExitSat;
    } else if (const auto* unsat = std::get_if<SearchUnsat>(&result)) {
      report["status"] = "unsat";
      report["certificate"] = unsat->certificate == SearchUnsat::Certificate::parity ? "parity" : "exhausted";
      stats = unsat->stats;
      code = kExitUnsat;
    } else {
      const auto& ind = std::get<SearchIndeterminate>(result);
      report["status"] = "indeterminate";
      report["reason"] = ind.reason;
      stats = ind.stats;
      io.err << "indeterminate: " << ind.reason << '\n';
    }
    report["nodes"] = stats.nodes;
    report["solutions"] = stats.solutions;
    emit(io.out, report);
    return code;
  });
}

int cmd_simulate(const SimulateCommandOptions& opts, Streams io) {
  return guarded(io, [&] {
    auto cfg = experiment_from_json(parse_json(read_input(opts.input, io.in)));
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.shots) cfg.shots = *opts.shots;
    const auto r = run_experiment(cfg);
    if (!opts.json) {
      write_histogram_csv(io.out, r);
      return kExitOk;
    }
    nlohmann::json hist = nlohmann::json::array();
    for (std::size_t j = 0; j < r.counts.size(); ++j) {
      hist.push_back({{"outcome", j},
                      {"count", r.counts[j]},
                      {"frequency", r.frequency[j]},
                      {"born", r.born[j]},
                      {"zscore", r.zscore[j]}});
    }
    emit(io.out, {{"config", experiment_to_json(cfg)}, {"shots", r.shots}, {"histogram", hist}});
    return kExitOk;
  });
}

namespace {

SpinDirection parse_direction(const std::string& text) {
  std::vector<double> xs;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || tok.find_first_not_of(" \t", used) != std::string::npos) {
      throw ParseError("bad direction \"" + text + "\"");
    }
    xs.push_back(v);
  }
  if (xs.size() == 1) return SpinDirection::in_xz_plane(xs[0]);
  if (xs.size() == 3) {
    const Eigen::Vector3d v(xs[0], xs[1], xs[2]);
    if (v.norm() == 0.0) throw DegenerateInputError("direction \"" + text + "\" is the zero vector");
    return SpinDirection(v.normalized());
  }
  throw ParseError("direction \"" + text + "\" needs one angle or three components");
}

}  // namespace

int cmd_bell(const BellCommandOptions& opts, Streams io) {
  return guarded(io, [&] {
    if (opts.directions.size() != 4) throw PreconditionError("bell needs four directions: a a' b b'");
    std::vector<SpinDirection> d;
    for (const auto& t : opts.directions) d.push_back(parse_direction(t));
    const auto singlet = singlet_state();
    const char* names[4] = {"a", "a'", "b", "b'"};

    nlohmann::json dirs, tables, corr;
    for (int k = 0; k < 4; ++k) {
      const auto& v = d[static_cast<std::size_t>(k)].vector();
      dirs[names[k]] = {v.x(), v.y(), v.z()};
    }
    for (int x : {0, 1}) {
      for (int y : {2, 3}) {
        const std::string key = std::string(names[x]) + "," + names[y];
        const auto t = joint_probabilities(singlet, d[static_cast<std::size_t>(x)], d[static_cast<std::size_t>(y)]);
        tables[key] = {{"++", t[0][0]}, {"+-", t[0][1]}, {"-+", t[1][0]}, {"--", t[1][1]}};
        corr[key] = t[0][0] + t[1][1] - t[0][1] - t[1][0];
      }
    }
    emit(io.out, {{"state", "singlet"},
                  {"directions", dirs},
                  {"tables", tables},
                  {"correlations", corr},
                  {"chsh", chsh(d[0], d[1], d[2], d[3])},
                  {"tsirelson_bound", 2.0 * std::numbers::sqrt2}});
    return kExitOk;
  });
}

int cmd_selftest(const SelftestCommandOptions& opts, Streams io) {
  return guarded(io, [&] {
    AcceptanceOptions ao;
    ao.tol_certify = opts.tol_certify;
    ao.seed = opts.seed;
    const auto results = run_acceptance(ao);
    if (opts.json) {
      emit(io.out, acceptance_to_json(results));
    } else {
      print_acceptance(io.out, results);
    }
    for (const auto& r : results)
      if (!r.passed) return 1;
    return 0;
  });
}

}  // namespace csm
