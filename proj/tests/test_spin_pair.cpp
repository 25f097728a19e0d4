#include "doctest.h"

#include <cmath>
#include <numbers>

#include "csm/spin_pair.hpp"

using namespace csm;

namespace {

const double kH = 1.0 / std::numbers::sqrt2;
const SpinDirection kZ = SpinDirection::in_xz_plane(0);

}  // namespace

TEST_CASE("coupled_basis_matrix") {
  const RealMatrix m = coupled_basis_matrix();
  CHECK(m.row(0) == Eigen::RowVector4d(1, 0, 0, 0));
  CHECK(m.row(1) == Eigen::RowVector4d(0, 0, 0, 1));
  CHECK(m.row(2) == Eigen::RowVector4d(0, kH, kH, 0));
  CHECK(m.row(3) == Eigen::RowVector4d(0, kH, -kH, 0));
  CHECK((m * m.transpose() - RealMatrix::Identity(4, 4)).norm() < 1e-15);
}

TEST_CASE("coupled versus separated transition") {
  const auto t = context_transition_coupled_vs_separated();
  CHECK(t(0, 0) == 1.0);  // |1,1> from |++>
  CHECK(t(1, 3) == 1.0);  // |1,-1> from |-->
  CHECK(t(3, 1) == doctest::Approx(0.5).epsilon(1e-15));
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(t.matrix().col(i).sum() == doctest::Approx(1.0).epsilon(1e-15));

  int ones = 0;
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index i = 0; i < 4; ++i) ones += t(j, i) == 1.0;
  CHECK(ones == 2);

  // Oracle: |<coupled_j|product_i>|² straight from the rows.
  const RealMatrix m = coupled_basis_matrix();
  CHECK((t.matrix() - m.cwiseAbs2()).norm() == 0.0);
}

TEST_CASE("singlet_state") {
  const auto s = singlet_state();
  CHECK(s.amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-15));
  const RealMatrix m = coupled_basis_matrix();
  const ComplexVector amp = s.amplitudes();
  CHECK(std::abs(m.row(3).cast<Complex>().dot(amp.transpose()) - 1.0) < 1e-15);
  for (Eigen::Index r = 0; r < 3; ++r) CHECK(std::abs(m.row(r).cast<Complex>().dot(amp.transpose())) < 1e-15);
}

TEST_CASE("joint_probabilities examples") {
  const auto s = singlet_state();
  const auto zz = joint_probabilities(s, kZ, kZ);
  CHECK(zz[0][1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(zz[1][0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(zz[0][0] == doctest::Approx(0.0));
  CHECK(zz[1][1] == doctest::Approx(0.0));

  const auto flip = joint_probabilities(s, kZ, SpinDirection::in_xz_plane(180));
  CHECK(flip[0][0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(flip[1][1] == doctest::Approx(0.5).epsilon(1e-14));

  const auto pp = joint_probabilities(PureState::basis(4, 0), kZ, kZ);
  CHECK(pp[0][0] == 1.0);
}

TEST_CASE("singlet correlation is minus the dot product") {
  const auto s = singlet_state();
  CHECK(correlation(s, kZ, kZ) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(correlation(s, kZ, SpinDirection::in_xz_plane(90))) < 1e-14);
  CHECK(correlation(s, kZ, SpinDirection::in_xz_plane(60)) == doctest::Approx(-0.5).epsilon(1e-14));

  CounterRng rng(3);
  for (int k = 0; k < 200; ++k) {
    const auto a = SpinDirection::spherical(std::acos(2 * rng.uniform() - 1), 2 * std::numbers::pi * rng.uniform());
    const auto b = SpinDirection::spherical(std::acos(2 * rng.uniform() - 1), 2 * std::numbers::pi * rng.uniform());
    CHECK(std::abs(correlation(s, a, b) + a.dot(b)) < 1e-12);
    const auto t = joint_probabilities(s, a, b);
    CHECK(std::abs(t[0][0] + t[0][1] - 0.5) < 1e-12);
    CHECK(std::abs(t[0][0] + t[1][0] - 0.5) < 1e-12);
    CHECK(std::abs(t[0][0] + t[0][1] + t[1][0] + t[1][1] - 1.0) < 1e-12);
  }
}

TEST_CASE("chsh") {
  const auto d = [](double deg) { return SpinDirection::in_xz_plane(deg); };
  CHECK(std::abs(std::abs(chsh(d(0), d(90), d(45), d(135))) - 2 * std::numbers::sqrt2) < 1e-9);
  const double e = correlation(singlet_state(), d(10), d(70));
  CHECK(chsh(d(10), d(10), d(70), d(70)) == doctest::Approx(2 * e).epsilon(1e-12));

  CounterRng rng(9);
  auto random_dir = [&] {
    return SpinDirection::spherical(std::acos(2 * rng.uniform() - 1), 2 * std::numbers::pi * rng.uniform());
  };
  for (int k = 0; k < 10000; ++k) {
    const double s = chsh(random_dir(), random_dir(), random_dir(), random_dir());
    CHECK(std::abs(s) <= 2 * std::numbers::sqrt2 + 1e-9);
  }
}

TEST_CASE("spin directions validate") {
  CHECK_THROWS_AS(SpinDirection(Eigen::Vector3d(1, 1, 0)), ValidationError);
  CHECK_THROWS_AS(spin_projector(kZ, 0), PreconditionError);
  const ComplexMatrix p = spin_projector(SpinDirection::spherical(0.4, 1.1), 1);
  CHECK(((p * p) - p).norm() < 1e-15);
  CHECK(std::abs(p.trace() - 1.0) < 1e-15);
}

TEST_CASE("extravalent spin modalities satisfy rule II") {
  const auto reg = spin_registry();
  CHECK(reg.class_count() == 16 - 4);
  CHECK(reg.class_of({"coupled", 0}) == reg.class_of({"separated", 0}));
  CHECK(reg.class_of({"coupled", 1}) == reg.class_of({"mixed", 1}));
  CHECK(reg.exclusivity_holds());

  const auto obs = spin_observations(reg);
  const auto report = validate_rule_II(reg, obs, 1e-12);
  CHECK(report.passed());
  CHECK(report.class_pairs < obs.size());

  // Singlet to |++>: zero from every embedding of |++>.
  const auto& singlet = (*reg.context("coupled").frame)[3];
  for (const Modality m : {Modality{"separated", 0}, Modality{"coupled", 0}, Modality{"mixed", 0}}) {
    CHECK(born_probability(singlet, (*reg.context(m.context).frame)[m.index]) < 1e-15);
  }

  // A wrong frame in one embedding is caught.
  std::vector<Observation> tampered = obs;
  for (auto& o : tampered) {
    if (o.initial == Modality{"mixed", 0} && o.final.context == "x") o.probability += 0.01;
  }
  CHECK_FALSE(validate_rule_II(reg, tampered, 1e-12).passed());
}
