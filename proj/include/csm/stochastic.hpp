#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "csm/matrix_core.hpp"

namespace csm {

inline constexpr double kTolStochastic = 1e-9;
inline constexpr double kTolCertify = 1e-8;

/// Column-stochastic matrix of transition weights. Entry (j, i) is p(j|i):
/// column i is the initial modality, row j the final one.
class TransitionMatrix {
 public:
  Eigen::Index dim() const noexcept { return p_.rows(); }
  double operator()(Eigen::Index j, Eigen::Index i) const { return p_(j, i); }
  const RealMatrix& matrix() const noexcept { return p_; }

 private:
  friend TransitionMatrix validate_stochastic(const ComplexMatrix&, double);
  friend TransitionMatrix unistochastic_from_unitary(const UnitaryMatrix&);
  explicit TransitionMatrix(RealMatrix p) : p_(std::move(p)) {}

  RealMatrix p_;
};

struct StochasticViolation {
  enum class Kind { not_square, non_finite, complex_entry, negative_entry, entry_above_one, column_sum };
  Kind kind;
  Eigen::Index row = -1;  // -1 when the violation concerns a whole column
  Eigen::Index col = -1;
  double value = 0.0;     // offending entry or column sum

  std::string describe() const;
};

class StochasticityError : public ValidationError {
 public:
  explicit StochasticityError(std::vector<StochasticViolation> violations);
  const std::vector<StochasticViolation>& violations() const noexcept { return violations_; }

 private:
  std::vector<StochasticViolation> violations_;
};

/// Checks squareness, real finite entries in [0,1] and unit column sums.
/// Throws StochasticityError listing every violation.
TransitionMatrix validate_stochastic(const ComplexMatrix& m, double tol = kTolStochastic);
inline TransitionMatrix validate_stochastic(const RealMatrix& m, double tol = kTolStochastic) {
  return validate_stochastic(ComplexMatrix(m.cast<Complex>()), tol);
}

/// p(j|i) = Tr(P'_i R P''_j R) with Tr(R²) = N and Tr(P'_i R²) = 1.
struct Lemma1Decomposition {
  ProjectorFrame frame_initial;  // {P'_i}
  ProjectorFrame frame_final;    // {P''_j}
  DiagonalNonneg r;
};

/// Builds the decomposition from the SVD of the entrywise square root of Π.
Lemma1Decomposition lemma1_decompose(const TransitionMatrix& pi);

/// Raw entries Tr(P'_i r P''_j r). Throws ValidationError if an entry has an
/// imaginary part above 1e-12.
RealMatrix lemma1_reconstruct_entries(const Lemma1Decomposition& dec);
/// Same, validated as column-stochastic.
TransitionMatrix lemma1_reconstruct(const Lemma1Decomposition& dec);

struct ConstraintResiduals {
  double trace_r2_minus_n = 0.0;        // Tr(r²) − N
  std::vector<double> per_projector;    // Tr(P'_i (r² − 1))
};

ConstraintResiduals constraint_residuals(const Lemma1Decomposition& dec);

/// Tr(P_u P_v), clamped to [0, 1]. Bit-exactly symmetric in its arguments.
double born_probability(const Projector& u, const Projector& v);

/// Entries |U_ji|².
TransitionMatrix unistochastic_from_unitary(const UnitaryMatrix& u);

/// Row sums equal to one within tol (columns already are).
bool is_doubly_stochastic(const TransitionMatrix& pi, double tol = kTolStochastic);

enum class CertifyMethod { exact_3x3, phase_optimization, construction };
const char* to_string(CertifyMethod m);

struct CertifyOptions {
  int restarts = 32;
  int max_iters = 5000;
  double tol_certify = kTolCertify;
  std::uint64_t seed = 0;

  void validate() const;  // throws PreconditionError
};

struct UnistochasticCertificate {
  UnitaryMatrix witness;
  double residual;  // max |,|U_ji|² − p(j|i)|
  CertifyMethod method;
  std::uint64_t seed;
};

/// Phase search gave up. Not a proof of non-unistochasticity for N ≥ 4.
struct NotCertified {
  double best_residual;  // ‖U†U − 1‖_F of the best phase assignment
  int restarts_run;
};

struct Refuted {
  std::string reason;
};

using CertifyResult = std::variant<UnistochasticCertificate, NotCertified, Refuted>;

struct PhaseSearchResult {
  double objective = 0.0;      // best ‖U†U − 1‖_F²
  ComplexMatrix best;          // moduli √p, optimized phases
  int best_restart = -1;
  int restarts_run = 0;
  long long total_iterations = 0;
};

/// Multi-start search over the phases of U_ji = √p(j|i)·e^{iθ_ji}, first row
/// and column gauged to zero phase. Each restart runs damped Gauss–Newton
/// (Levenberg–Marquardt) steps with random basin hops, at most `max_iters`
/// steps in total. Restart k draws from stream k of `opts.seed`. Stops after
/// the first restart whose objective falls to tol_certify².
PhaseSearchResult optimize_phases(const TransitionMatrix& pi, const CertifyOptions& opts);

/// Gradient of ‖U†U − 1‖_F² with respect to the phases of `u` (gauge entries
/// included; callers mask them).
RealMatrix phase_objective_gradient(const ComplexMatrix& u);

/// Three-way unistochasticity decision: refuted when not doubly stochastic or
/// when the exact 3×3 test fails, certified with a witness, or not certified.
CertifyResult certify_unistochastic(const TransitionMatrix& pi, const CertifyOptions& opts = {});

/// Exact test for N = 3: for every column pair the link lengths
/// √(p(j|i)p(j|k)) must close a triangle. Throws DimensionError for N ≠ 3 and
/// PreconditionError if Π is not doubly stochastic.
bool unistochastic_oracle_3x3(const TransitionMatrix& pi);

/// Hermitian, positive semidefinite, unit trace.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix rho, double tol = kTolProjector);

  const ComplexMatrix& matrix() const noexcept { return rho_; }
  Eigen::Index dim() const noexcept { return rho_.rows(); }

 private:
  ComplexMatrix rho_;
};

/// Given Tr(ρP) = 1 within tol, checks ‖ρ − P‖_F ≤ 2√tol. Throws
/// PreconditionError with the measured trace when Tr(ρP) < 1 − tol.
bool gleason_pure_state_check(const DensityMatrix& rho, const Projector& p, double tol = kTolProjector);

// {"n": N, "convention": "column", "p": [[p(j|i) row-major, row j]]}
nlohmann::json transition_to_json(const TransitionMatrix& pi);
TransitionMatrix transition_from_json(const nlohmann::json& j, double tol = kTolStochastic);

nlohmann::json certify_result_to_json(const CertifyResult& r, std::uint64_t seed);

}  // namespace csm
