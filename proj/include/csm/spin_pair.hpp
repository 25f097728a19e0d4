#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "csm/interferometer.hpp"
#include "csm/matrix_core.hpp"
#include "csm/modality.hpp"
#include "csm/stochastic.hpp"

namespace csm {

/// Unit measurement axis in R³.
class SpinDirection {
 public:
  /// Throws ValidationError unless ‖n‖ = 1 within 1e-12.
  explicit SpinDirection(const Eigen::Vector3d& n);
  /// cos(φ) sin(θ), sin(φ) sin(θ), cos(θ) with angles in radians.
  static SpinDirection spherical(double theta, double phi);
  /// Axis at `degrees` from z, rotating towards x.
  static SpinDirection in_xz_plane(double degrees);

  const Eigen::Vector3d& vector() const noexcept { return n_; }
  double dot(const SpinDirection& o) const { return n_.dot(o.n_); }

 private:
  Eigen::Vector3d n_;
};

// Product basis order: |++⟩, |+−⟩, |−+⟩, |−−⟩ (first spin first).
// Coupled basis order: |1,1⟩, |1,−1⟩, |1,0⟩, |0,0⟩.

/// Rows are the coupled kets written in the product basis.
RealMatrix coupled_basis_matrix();

/// p(coupled j | product i) at (j, i); equal to |M_ji|² for the matrix above.
TransitionMatrix context_transition_coupled_vs_separated();

/// (|+−⟩ − |−+⟩)/√2.
PureState singlet_state();

/// (1 + s n·σ)/2 for s = ±1.
ComplexMatrix spin_projector(const SpinDirection& n, int sign);

/// Kronecker product a ⊗ b.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// table[x][y] = p(first spin x along a, second spin y along b), index 0 for
/// +, 1 for −.
using JointTable = std::array<std::array<double, 2>, 2>;
JointTable joint_probabilities(const PureState& state, const SpinDirection& a, const SpinDirection& b);

/// p(+,+) + p(−,−) − p(+,−) − p(−,+).
double correlation(const PureState& state, const SpinDirection& a, const SpinDirection& b);

/// E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′) on the singlet.
double chsh(const SpinDirection& a, const SpinDirection& a2, const SpinDirection& b, const SpinDirection& b2);

/// Contexts over the two-spin system, each with its frame:
///   "separated" (S_z1, S_z2), "coupled" (S², S_z), "mixed" {|++⟩, |−−⟩,
///   (|+−⟩ ± i|−+⟩)/√2} and "x" (S_x1, S_x2).
/// The m_S = ±1 modalities are linked to |++⟩ and |−−⟩ wherever they recur.
ExtravalenceRegistry spin_registry();

/// Born probability for every ordered pair of modalities in different
/// contexts, each computed from its own context's projectors.
std::vector<Observation> spin_observations(const ExtravalenceRegistry& reg);

}  // namespace csm
