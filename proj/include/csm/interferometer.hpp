#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "csm/matrix_core.hpp"
#include "csm/modality.hpp"
#include "csm/random.hpp"

namespace csm {

/// Unit vector of amplitudes over N transmission lines.
class PureState {
 public:
  /// Throws ValidationError unless ‖amplitudes‖ = 1 within 1e-12.
  explicit PureState(ComplexVector amplitudes);
  /// Rescales a nonzero vector; throws DegenerateInputError on zero.
  static PureState normalized(const ComplexVector& v);
  static PureState basis(Eigen::Index n, Eigen::Index line);

  Eigen::Index dim() const noexcept { return amplitudes_.size(); }
  const ComplexVector& amplitudes() const noexcept { return amplitudes_; }

 private:
  struct Trusted {};
  PureState(ComplexVector amplitudes, Trusted) : amplitudes_(std::move(amplitudes)) {}
  ComplexVector amplitudes_;
};

/// Mixes lines a and b with [[cos θ, −e^{−iφ} sin θ], [e^{iφ} sin θ, cos θ]].
struct BeamSplitter {
  Eigen::Index a = 0;
  Eigen::Index b = 1;
  double theta = 0.0;
  double phi = 0.0;
};

/// Multiplies the amplitude on one line by e^{iφ}.
struct PhaseShifter {
  Eigen::Index line = 0;
  double phi = 0.0;
};

using NetworkElement = std::variant<BeamSplitter, PhaseShifter>;

/// Elements act in list order: the first element meets the particle first.
struct Network {
  Eigen::Index dim = 0;
  std::vector<NetworkElement> elements;
};

/// Throws ValidationError on a line out of range, a beam splitter joining a
/// line to itself, or a non-finite angle.
void validate_network(const Network& net);

/// The 2×2 block of a beam splitter.
ComplexMatrix beam_splitter_block(double theta, double phi);

/// E_m ⋯ E_1 for elements E_1, ..., E_m.
UnitaryMatrix network_unitary(const Network& net);

std::size_t beam_splitter_count(const Network& net);

/// Triangular nulling: sub-diagonal entries are cleared column by column,
/// bottom row first, each by a beam splitter on adjacent lines. The result
/// lists N phase shifters followed by at most N(N−1)/2 beam splitters.
Network reck_decompose(const UnitaryMatrix& u);

/// Born probabilities ⟨ψ|P_j|ψ⟩ for each projector of the frame.
std::vector<double> outcome_probabilities(const PureState& state, const ProjectorFrame& frame);

struct MeasurementOutcome {
  std::size_t outcome;
  double probability;
  PureState state;  // normalized P_outcome ψ
};

/// Samples one outcome and collapses the state onto it; the particle stays in
/// the array.
MeasurementOutcome measure_nondestructive(const PureState& state, const ProjectorFrame& frame, CounterRng& rng);

/// Samples an outcome without returning a post-measurement state.
std::size_t measure_destructive(const PureState& state, const ProjectorFrame& frame, CounterRng& rng);

/// The N single-line projectors.
ProjectorFrame computational_frame(Eigen::Index n);

struct ExperimentConfig {
  Eigen::Index n = 2;
  std::string prepare_context = "C1";
  std::size_t prepare_outcome = 0;
  std::string measure_context = "C2";
  Network network;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  bool keep_records = false;
};

struct MeasurementRecord {
  std::string context;
  std::size_t outcome;
  std::uint64_t shot;
};

struct ExperimentResult {
  std::vector<std::uint64_t> counts;
  std::vector<double> frequency;  // all zero when shots = 0
  std::vector<double> born;
  std::vector<double> zscore;  // (count − shots·p) / √(shots·p(1−p)), 0 if the variance is 0
  std::vector<MeasurementRecord> records;
  std::uint64_t shots = 0;
};

/// The particle enters on line prepare_outcome, crosses the network and is
/// measured on the output lines. Shot k draws from CounterRng(seed, k).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Columns outcome,count,frequency,born,zscore.
void write_histogram_csv(std::ostream& out, const ExperimentResult& r);

/// A link (input_context, i) ↔ (output_context, j) for every input line whose
/// output distribution puts probability 1 (within 1e-10) on line j.
std::vector<std::pair<Modality, Modality>> extravalence_links_from_network(const Network& net,
                                                                           const std::string& input_context = "C1",
                                                                           const std::string& output_context = "C2");

// {"n":N, "prepare":{"context":..,"outcome":..}, "measure":.., "network":[{"bs":[a,b],"theta":..,"phi":..} |
//  {"ps":line,"phi":..}], "shots":.., "seed":..}
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);
Network network_from_json(Eigen::Index n, const nlohmann::json& elements);
nlohmann::json network_to_json(const Network& net);

}  // namespace csm
