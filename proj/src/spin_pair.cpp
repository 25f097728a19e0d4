#include "csm/spin_pair.hpp"

#include <cmath>
#include <numbers>

namespace csm {

SpinDirection::SpinDirection(const Eigen::Vector3d& n) : n_(n) {
  if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-12) {
    throw ValidationError("spin direction must be a unit vector");
  }
}

SpinDirection SpinDirection::spherical(double theta, double phi) {
  return SpinDirection(Eigen::Vector3d(std::cos(phi) * std::sin(theta), std::sin(phi) * std::sin(theta),
                                       std::cos(theta)));
}

SpinDirection SpinDirection::in_xz_plane(double degrees) {
  return spherical(degrees * std::numbers::pi / 180.0, 0.0);
}

RealMatrix coupled_basis_matrix() {
  const double h = 1.0 / std::numbers::sqrt2;
  RealMatrix m(4, 4);
  m << 1, 0, 0, 0,   //
      0, 0, 0, 1,    //
      0, h, h, 0,    //
      0, h, -h, 0;
  return m;
}

TransitionMatrix context_transition_coupled_vs_separated() {
  return unistochastic_from_unitary(UnitaryMatrix(coupled_basis_matrix().cast<Complex>()));
}

PureState singlet_state() {
  const double h = 1.0 / std::numbers::sqrt2;
  ComplexVector v(4);
  v << 0, h, -h, 0;
  return PureState(std::move(v));
}

ComplexMatrix spin_projector(const SpinDirection& n, int sign) {
  if (sign != 1 && sign != -1) throw PreconditionError("sign must be +1 or -1");
  const auto& v = n.vector();
  const double s = sign;
  ComplexMatrix p(2, 2);
  // n·σ = [[z, x − iy], [x + iy, −z]]
  p << 1.0 + s * v.z(), s * Complex(v.x(), -v.y()), s * Complex(v.x(), v.y()), 1.0 - s * v.z();
  return 0.5 * p;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
  return out;
}

JointTable joint_probabilities(const PureState& state, const SpinDirection& a, const SpinDirection& b) {
  if (state.dim() != 4) throw DimensionError("two spins need a 4-dimensional state");
  const auto& psi = state.amplitudes();
  JointTable t{};
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      const ComplexMatrix p = kron(spin_projector(a, x == 0 ? 1 : -1), spin_projector(b, y == 0 ? 1 : -1));
      t[x][y] = std::max(0.0, psi.dot(p * psi).real());
    }
  }
  return t;
}

double correlation(const PureState& state, const SpinDirection& a, const SpinDirection& b) {
  const auto t = joint_probabilities(state, a, b);
  return t[0][0] + t[1][1] - t[0][1] - t[1][0];
}

double chsh(const SpinDirection& a, const SpinDirection& a2, const SpinDirection& b, const SpinDirection& b2) {
  const auto s = singlet_state();
  return correlation(s, a, b) - correlation(s, a, b2) + correlation(s, a2, b) + correlation(s, a2, b2);
}

ExtravalenceRegistry spin_registry() {
  const double h = 1.0 / std::numbers::sqrt2;
  const Complex i(0.0, 1.0);

  ComplexMatrix mixed = ComplexMatrix::Zero(4, 4);
  mixed(0, 0) = 1.0;
  mixed(3, 1) = 1.0;
  mixed(1, 2) = h;
  mixed(2, 2) = i * h;
  mixed(1, 3) = h;
  mixed(2, 3) = -i * h;

  ComplexMatrix x_single(2, 2);
  x_single << h, h, h, -h;

  ExtravalenceRegistry reg({4});
  reg.register_context({"separated", {"++", "+-", "-+", "--"}, computational_frame(4)});
  reg.register_context({"coupled",
                        {"S=1,m=1", "S=1,m=-1", "S=1,m=0", "S=0,m=0"},
                        frame_from_unitary(coupled_basis_matrix().transpose().cast<Complex>())});
  reg.register_context({"mixed", {"++", "--", "a", "b"}, frame_from_unitary(mixed)});
  reg.register_context({"x", {"++x", "+-x", "-+x", "--x"}, frame_from_unitary(kron(x_single, x_single))});

  reg.link_certain({"coupled", 0}, {"separated", 0});
  reg.link_certain({"coupled", 1}, {"separated", 3});
  reg.link_certain({"mixed", 0}, {"separated", 0});
  reg.link_certain({"mixed", 1}, {"separated", 3});
  return reg;
}

std::vector<Observation> spin_observations(const ExtravalenceRegistry& reg) {
  std::vector<Observation> out;
  const auto& ctxs = reg.contexts();
  for (const auto& c1 : ctxs) {
    for (const auto& c2 : ctxs) {
      if (c1.id == c2.id || !c1.frame || !c2.frame) continue;
      for (std::size_t i = 0; i < c1.frame->size(); ++i) {
        for (std::size_t j = 0; j < c2.frame->size(); ++j) {
          out.push_back({{c1.id, i}, {c2.id, j}, born_probability((*c1.frame)[i], (*c2.frame)[j])});
        }
      }
    }
  }
  return out;
}

}  // namespace csm
