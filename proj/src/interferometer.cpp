#include "csm/interferometer.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace csm {

PureState::PureState(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  require_finite(amplitudes_, "state");
  if (amplitudes_.size() == 0) throw DimensionError("state has no lines");
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > 1e-12) {
    throw ValidationError("state norm is " + std::to_string(norm) + ", not 1");
  }
}

PureState PureState::normalized(const ComplexVector& v) {
  require_finite(v, "state");
  const double norm = v.norm();
  if (norm == 0.0) throw DegenerateInputError("cannot normalize the zero vector");
  return PureState(v / norm, Trusted{});
}

PureState PureState::basis(Eigen::Index n, Eigen::Index line) {
  if (line < 0 || line >= n) throw DimensionError("line " + std::to_string(line) + " out of range");
  ComplexVector v = ComplexVector::Zero(n);
  v(line) = 1.0;
  return PureState(std::move(v), Trusted{});
}

void validate_network(const Network& net) {
  if (net.dim < 1) throw ValidationError("network needs at least one line");
  auto check_line = [&](Eigen::Index l) {
    if (l < 0 || l >= net.dim) {
      throw ValidationError("line " + std::to_string(l) + " out of range for " + std::to_string(net.dim) +
                            " lines");
    }
  };
  for (const auto& e : net.elements) {
    if (const auto* bs = std::get_if<BeamSplitter>(&e)) {
      check_line(bs->a);
      check_line(bs->b);
      if (bs->a == bs->b) throw ValidationError("beam splitter joins line " + std::to_string(bs->a) + " to itself");
      if (!std::isfinite(bs->theta) || !std::isfinite(bs->phi)) throw ValidationError("non-finite angle");
    } else {
      const auto& ps = std::get<PhaseShifter>(e);
      check_line(ps.line);
      if (!std::isfinite(ps.phi)) throw ValidationError("non-finite phase");
    }
  }
}

ComplexMatrix beam_splitter_block(double theta, double phi) {
  const double c = std::cos(theta), s = std::sin(theta);
  const Complex e = std::polar(1.0, phi);
  ComplexMatrix m(2, 2);
  m << c, -std::conj(e) * s, e * s, c;
  return m;
}

namespace {

// u ← E u
void apply_left(ComplexMatrix& u, const NetworkElement& e) {
  if (const auto* bs = std::get_if<BeamSplitter>(&e)) {
    const ComplexMatrix b = beam_splitter_block(bs->theta, bs->phi);
    const Eigen::RowVectorXcd ra = u.row(bs->a), rb = u.row(bs->b);
    u.row(bs->a) = b(0, 0) * ra + b(0, 1) * rb;
    u.row(bs->b) = b(1, 0) * ra + b(1, 1) * rb;
  } else {
    const auto& ps = std::get<PhaseShifter>(e);
    u.row(ps.line) *= std::polar(1.0, ps.phi);
  }
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);  // [−π, π]
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

UnitaryMatrix network_unitary(const Network& net) {
  validate_network(net);
  ComplexMatrix u = ComplexMatrix::Identity(net.dim, net.dim);
  for (const auto& e : net.elements) apply_left(u, e);
  return UnitaryMatrix(std::move(u));
}

std::size_t beam_splitter_count(const Network& net) {
  std::size_t k = 0;
  for (const auto& e : net.elements) k += std::holds_alternative<BeamSplitter>(e);
  return k;
}

Network reck_decompose(const UnitaryMatrix& u) {
  const Eigen::Index n = u.dim();
  ComplexMatrix w = u.matrix();
  std::vector<BeamSplitter> nulling;  // T_1, T_2, ... with T_K ⋯ T_1 U diagonal
  for (Eigen::Index c = 0; c + 1 < n; ++c) {
    for (Eigen::Index r = n - 1; r > c; --r) {
      const Complex x = w(r - 1, c), y = w(r, c);
      if (y == 0.0) continue;
      // Bottom output e^{iφ} sin θ x + cos θ y vanishes for tan θ e^{iφ} = −y/x.
      const double theta = std::atan2(std::abs(y), std::abs(x));
      const double phi = x == 0.0 ? 0.0 : std::arg(-y / x);
      BeamSplitter t{r - 1, r, theta, phi};
      apply_left(w, t);
      w(r, c) = 0.0;
      nulling.push_back(t);
    }
  }
  // U = T_1⁻¹ ⋯ T_K⁻¹ D, and BS(θ, φ)⁻¹ = BS(θ, φ + π).
  Network net{n, {}};
  for (Eigen::Index i = 0; i < n; ++i) net.elements.emplace_back(PhaseShifter{i, std::arg(w(i, i))});
  for (auto it = nulling.rbegin(); it != nulling.rend(); ++it) {
    net.elements.emplace_back(BeamSplitter{it->a, it->b, it->theta, wrap_angle(it->phi + std::numbers::pi)});
  }
  return net;
}

std::vector<double> outcome_probabilities(const PureState& state, const ProjectorFrame& frame) {
  if (frame.dim() != state.dim()) throw DimensionError("state and frame dimensions differ");
  std::vector<double> p(frame.size());
  const auto& psi = state.amplitudes();
  for (std::size_t j = 0; j < frame.size(); ++j) {
    p[j] = std::max(0.0, psi.dot(frame[j].matrix() * psi).real());
  }
  return p;
}

namespace {

std::size_t sample(std::vector<double>& p, CounterRng& rng) {
  double total = 0.0;
  for (auto& x : p) {
    if (x < 1e-14) x = 0.0;
    total += x;
  }
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    last = j;
    acc += p[j];
    if (u < acc) return j;
  }
  return last;
}

}  // namespace

MeasurementOutcome measure_nondestructive(const PureState& state, const ProjectorFrame& frame, CounterRng& rng) {
  auto p = outcome_probabilities(state, frame);
  const std::size_t j = sample(p, rng);
  return {j, p[j], PureState::normalized(frame[j].matrix() * state.amplitudes())};
}

std::size_t measure_destructive(const PureState& state, const ProjectorFrame& frame, CounterRng& rng) {
  auto p = outcome_probabilities(state, frame);
  return sample(p, rng);
}

ProjectorFrame computational_frame(Eigen::Index n) { return frame_from_unitary(UnitaryMatrix::identity(n)); }

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.network.dim != cfg.n) throw ValidationError("network dimension differs from n");
  if (cfg.prepare_outcome >= static_cast<std::size_t>(cfg.n)) {
    throw ValidationError("prepared line " + std::to_string(cfg.prepare_outcome) + " out of range");
  }
  const auto u = network_unitary(cfg.network);
  const auto psi = PureState::normalized(u.matrix().col(static_cast<Eigen::Index>(cfg.prepare_outcome)));
  const auto frame = computational_frame(cfg.n);

  ExperimentResult r;
  r.shots = cfg.shots;
  r.born = outcome_probabilities(psi, frame);
  const std::size_t n = r.born.size();
  r.counts.assign(n, 0);
  for (std::uint64_t shot = 0; shot < cfg.shots; ++shot) {
    CounterRng rng(cfg.seed, shot);
    const auto j = measure_nondestructive(psi, frame, rng).outcome;
    ++r.counts[j];
    if (cfg.keep_records) r.records.push_back({cfg.measure_context, j, shot});
  }
  r.frequency.assign(n, 0.0);
  r.zscore.assign(n, 0.0);
  if (cfg.shots > 0) {
    const double shots = static_cast<double>(cfg.shots);
    for (std::size_t j = 0; j < n; ++j) {
      r.frequency[j] = static_cast<double>(r.counts[j]) / shots;
      const double var = shots * r.born[j] * (1.0 - r.born[j]);
      if (var > 0.0) r.zscore[j] = (static_cast<double>(r.counts[j]) - shots * r.born[j]) / std::sqrt(var);
    }
  }
  return r;
}

void write_histogram_csv(std::ostream& out, const ExperimentResult& r) {
  out << "outcome,count,frequency,born,zscore\n";
  char buf[160];
  for (std::size_t j = 0; j < r.counts.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%zu,%llu,%.10f,%.10f,%.6f\n", j, static_cast<unsigned long long>(r.counts[j]),
                  r.frequency[j], r.born[j], r.zscore[j]);
    out << buf;
  }
}

std::vector<std::pair<Modality, Modality>> extravalence_links_from_network(const Network& net,
                                                                           const std::string& input_context,
                                                                           const std::string& output_context) {
  const auto u = network_unitary(net);
  std::vector<std::pair<Modality, Modality>> links;
  for (Eigen::Index i = 0; i < u.dim(); ++i) {
    for (Eigen::Index j = 0; j < u.dim(); ++j) {
      if (std::norm(u(j, i)) >= 1.0 - 1e-10) {
        links.push_back({{input_context, static_cast<std::size_t>(i)}, {output_context, static_cast<std::size_t>(j)}});
      }
    }
  }
  return links;
}

Network network_from_json(Eigen::Index n, const nlohmann::json& elements) {
  Network net{n, {}};
  for (const auto& e : elements) {
    if (e.contains("bs")) {
      const auto lines = e.at("bs").get<std::vector<Eigen::Index>>();
      if (lines.size() != 2) throw ParseError("\"bs\" needs two lines");
      net.elements.emplace_back(
          BeamSplitter{lines[0], lines[1], e.at("theta").get<double>(), e.value("phi", 0.0)});
    } else if (e.contains("ps")) {
      net.elements.emplace_back(PhaseShifter{e.at("ps").get<Eigen::Index>(), e.at("phi").get<double>()});
    } else {
      throw ParseError("network element needs \"bs\" or \"ps\"");
    }
  }
  validate_network(net);
  return net;
}

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : net.elements) {
    if (const auto* bs = std::get_if<BeamSplitter>(&e)) {
      out.push_back({{"bs", {bs->a, bs->b}}, {"theta", bs->theta}, {"phi", bs->phi}});
    } else {
      const auto& ps = std::get<PhaseShifter>(e);
      out.push_back({{"ps", ps.line}, {"phi", ps.phi}});
    }
  }
  return out;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig cfg;
    cfg.n = j.at("n").get<Eigen::Index>();
    if (cfg.n < 1) throw ValidationError("n must be positive");
    if (j.contains("prepare")) {
      const auto& p = j.at("prepare");
      cfg.prepare_context = p.value("context", cfg.prepare_context);
      cfg.prepare_outcome = p.at("outcome").get<std::size_t>();
    }
    cfg.measure_context = j.value("measure", cfg.measure_context);
    cfg.network = network_from_json(cfg.n, j.value("network", nlohmann::json::array()));
    cfg.shots = j.value("shots", std::uint64_t{0});
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (cfg.prepare_outcome >= static_cast<std::size_t>(cfg.n)) {
      throw ValidationError("prepared outcome " + std::to_string(cfg.prepare_outcome) + " out of range");
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment JSON: ") + e.what());
  }
}

nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
  return {{"n", cfg.n},
          {"prepare", {{"context", cfg.prepare_context}, {"outcome", cfg.prepare_outcome}}},
          {"measure", cfg.measure_context},
          {"network", network_to_json(cfg.network)},
          {"shots", cfg.shots},
          {"seed", cfg.seed}};
}

}  // namespace csm
