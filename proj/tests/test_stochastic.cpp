#include "doctest.h"

#include <cmath>
#include <numbers>

#include "csm/random.hpp"
#include "csm/stochastic.hpp"

using namespace csm;

namespace {

RealMatrix rm(Eigen::Index n, std::initializer_list<double> rowmajor) {
  RealMatrix m(n, n);
  auto it = rowmajor.begin();
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = *it++;
  return m;
}

const double kC = std::cos(std::numbers::pi / 8);
const double kS = std::sin(std::numbers::pi / 8);

TransitionMatrix cyclic_half() {
  return validate_stochastic(rm(3, {0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.5, 0.0, 0.5}));
}

}  // namespace

TEST_CASE("validate_stochastic") {
  CHECK_NOTHROW(validate_stochastic(RealMatrix(RealMatrix::Identity(4, 4))));
  CHECK_NOTHROW(validate_stochastic(rm(2, {0.5, 0.5, 0.5, 0.5})));
  try {
    validate_stochastic(rm(2, {0.6, 0.5, 0.5, 0.5}));
    FAIL("expected a violation");
  } catch (const StochasticityError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0].kind == StochasticViolation::Kind::column_sum);
    CHECK(e.violations()[0].col == 0);
    CHECK(e.violations()[0].value == doctest::Approx(1.1));
  }
  CHECK_THROWS_AS(validate_stochastic(rm(2, {1.5, 0.0, -0.5, 1.0})), StochasticityError);
  ComplexMatrix z = ComplexMatrix::Identity(2, 2);
  z(0, 1) = Complex(0.0, 0.1);
  CHECK_THROWS_AS(validate_stochastic(z), StochasticityError);
  CHECK_THROWS_AS(validate_stochastic(RealMatrix(RealMatrix::Ones(2, 3))), StochasticityError);
}

TEST_CASE("lemma1_decompose examples") {
  SUBCASE("identity") {
    const auto dec = lemma1_decompose(validate_stochastic(RealMatrix(RealMatrix::Identity(3, 3))));
    CHECK((dec.r.values() - RealVector::Ones(3)).norm() < 1e-15);
    for (Eigen::Index i = 0; i < 3; ++i) {
      ComplexMatrix e = ComplexMatrix::Zero(3, 3);
      e(i, i) = 1.0;
      CHECK((dec.frame_initial[static_cast<std::size_t>(i)].matrix() - e).norm() < 1e-15);
      CHECK((dec.frame_final[static_cast<std::size_t>(i)].matrix() - e).norm() < 1e-15);
    }
  }
  SUBCASE("rotation pi/8") {
    const auto pi = validate_stochastic(rm(2, {kC * kC, kS * kS, kS * kS, kC * kC}));
    const auto dec = lemma1_decompose(pi);
    CHECK(std::abs(dec.r.values()(0) - (kC + kS)) < 1e-14);
    CHECK(std::abs(dec.r.values()(1) - (kC - kS)) < 1e-14);
    // Unistochastic, yet this decomposition has r ≠ 1.
    CHECK(std::holds_alternative<UnistochasticCertificate>(certify_unistochastic(pi)));
  }
}

TEST_CASE("lemma1 round trip and constraints on random matrices") {
  CounterRng rng(2024);
  for (int trial = 0; trial < 140; ++trial) {
    const Eigen::Index n = 2 + trial % 7;
    const auto pi = validate_stochastic(random_column_stochastic(n, rng));
    const auto dec = lemma1_decompose(pi);
    const auto back = lemma1_reconstruct(dec);
    CHECK((back.matrix() - pi.matrix()).cwiseAbs().maxCoeff() <= 1e-10);
    const auto res = constraint_residuals(dec);
    CHECK(std::abs(res.trace_r2_minus_n) <= 1e-10);
    double total = 0.0;
    for (double v : res.per_projector) {
      // Tr(P'_i r²) = 1 ⇔ Tr(P'_i (r² − 1)) = 0.
      CHECK(std::abs(v) <= 1e-10);
      total += v;
    }
    CHECK(std::abs(total) <= 1e-9);
  }
}

TEST_CASE("lemma1_reconstruct with r = 1 gives |V†U|²") {
  CounterRng rng(8);
  for (Eigen::Index n = 2; n <= 6; ++n) {
    const auto u = haar_unitary(n, rng);
    const auto v = haar_unitary(n, rng);
    Lemma1Decomposition dec{frame_from_unitary(u), frame_from_unitary(v), DiagonalNonneg(RealVector::Ones(n))};
    const RealMatrix expected = (v.matrix().adjoint() * u.matrix()).cwiseAbs2();
    const auto pi = lemma1_reconstruct(dec);
    CHECK((pi.matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
    const auto res = constraint_residuals(dec);
    for (double x : res.per_projector) CHECK(std::abs(x) < 1e-12);
    const auto cert = certify_unistochastic(pi);
    REQUIRE(std::holds_alternative<UnistochasticCertificate>(cert));
    CHECK(std::get<UnistochasticCertificate>(cert).residual <= 1e-8);
  }
  Lemma1Decomposition id{frame_from_unitary(UnitaryMatrix::identity(3)), frame_from_unitary(UnitaryMatrix::identity(3)),
                         DiagonalNonneg(RealVector::Ones(3))};
  CHECK(lemma1_reconstruct(id).matrix() == RealMatrix::Identity(3, 3));
  const auto res = constraint_residuals(id);
  CHECK(res.trace_r2_minus_n == 0.0);
  Lemma1Decomposition bad{frame_from_unitary(UnitaryMatrix::identity(3)), frame_from_unitary(UnitaryMatrix::identity(3)),
                          DiagonalNonneg(RealVector::Ones(2))};
  CHECK_THROWS_AS(lemma1_reconstruct(bad), DimensionError);
}

TEST_CASE("born_probability") {
  ComplexVector z(2), x(2), zd(2);
  z << 1.0, 0.0;
  zd << 0.0, 1.0;
  x << (1.0 / std::numbers::sqrt2), (1.0 / std::numbers::sqrt2);
  const auto pz = projector_from_vector(z), px = projector_from_vector(x), pzd = projector_from_vector(zd);
  CHECK(born_probability(pz, pz) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(born_probability(pz, pzd) == 0.0);
  CHECK(born_probability(pz, px) == doctest::Approx(0.5).epsilon(1e-15));

  CounterRng rng(4);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = 2 + t % 5;
    const auto f1 = frame_from_unitary(haar_unitary(n, rng));
    const auto f2 = frame_from_unitary(haar_unitary(n, rng));
    for (const auto& pu : f1) {
      double sum = 0.0;
      for (const auto& pv : f2) {
        const double p = born_probability(pu, pv);
        CHECK(p == born_probability(pv, pu));  // exact
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    const ComplexVector a = random_unit_vector(n, rng), b = random_unit_vector(n, rng);
    CHECK(std::abs(born_probability(projector_from_vector(a), projector_from_vector(b)) -
                   std::norm(a.dot(b))) < 1e-13);
  }
}

TEST_CASE("unistochastic_from_unitary and is_doubly_stochastic") {
  CHECK(unistochastic_from_unitary(UnitaryMatrix::identity(3)).matrix() == RealMatrix::Identity(3, 3));
  ComplexMatrix bs(2, 2);
  const double h = (1.0 / std::numbers::sqrt2);
  bs << h, -h, h, h;
  CHECK((unistochastic_from_unitary(UnitaryMatrix(bs)).matrix() - RealMatrix::Constant(2, 2, 0.5))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  CounterRng rng(6);
  for (int t = 0; t < 20; ++t) {
    const auto pi = unistochastic_from_unitary(haar_unitary(4, rng));
    CHECK((pi.matrix().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((pi.matrix().colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }

  CHECK(is_doubly_stochastic(validate_stochastic(RealMatrix(RealMatrix::Identity(3, 3)))));
  CHECK(is_doubly_stochastic(validate_stochastic(rm(2, {0.5, 0.5, 0.5, 0.5}))));
  CHECK_FALSE(is_doubly_stochastic(validate_stochastic(rm(2, {1.0, 0.5, 0.0, 0.5}))));
}

TEST_CASE("unistochastic_oracle_3x3") {
  CHECK(unistochastic_oracle_3x3(validate_stochastic(RealMatrix(RealMatrix::Identity(3, 3)))));
  CHECK(unistochastic_oracle_3x3(validate_stochastic(RealMatrix(RealMatrix::Constant(3, 3, 1.0 / 3)))));
  CHECK_FALSE(unistochastic_oracle_3x3(cyclic_half()));
  CHECK_THROWS_AS(unistochastic_oracle_3x3(validate_stochastic(RealMatrix(RealMatrix::Identity(2, 2)))),
                  DimensionError);
  CHECK_THROWS_AS(unistochastic_oracle_3x3(validate_stochastic(rm(3, {1, 1, 1, 0, 0, 0, 0, 0, 0}))),
                  PreconditionError);
}

TEST_CASE("phase gradient matches finite differences") {
  CounterRng rng(12);
  const auto pi = unistochastic_from_unitary(haar_unitary(4, rng));
  const RealMatrix mod = pi.matrix().cwiseSqrt();
  RealMatrix theta(4, 4);
  for (Eigen::Index c = 0; c < 4; ++c)
    for (Eigen::Index r = 0; r < 4; ++r) theta(r, c) = 2 * std::numbers::pi * rng.uniform();
  auto build = [&](const RealMatrix& th) {
    ComplexMatrix u(4, 4);
    for (Eigen::Index c = 0; c < 4; ++c)
      for (Eigen::Index r = 0; r < 4; ++r) u(r, c) = std::polar(mod(r, c), th(r, c));
    return u;
  };
  auto f = [&](const RealMatrix& th) {
    const ComplexMatrix u = build(th);
    return (u.adjoint() * u - ComplexMatrix::Identity(4, 4)).squaredNorm();
  };
  const RealMatrix g = phase_objective_gradient(build(theta));
  const double h = 1e-6;
  for (Eigen::Index c = 0; c < 4; ++c) {
    for (Eigen::Index r = 0; r < 4; ++r) {
      RealMatrix tp = theta, tm = theta;
      tp(r, c) += h;
      tm(r, c) -= h;
      CHECK(std::abs((f(tp) - f(tm)) / (2 * h) - g(r, c)) < 1e-7);
    }
  }
}

TEST_CASE("certify_unistochastic examples") {
  SUBCASE("permutation") {
    const auto p = rm(4, {0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0});
    const auto r = certify_unistochastic(validate_stochastic(p));
    REQUIRE(std::holds_alternative<UnistochasticCertificate>(r));
    const auto& c = std::get<UnistochasticCertificate>(r);
    CHECK(c.residual == 0.0);
    CHECK(c.method == CertifyMethod::construction);
    CHECK(c.witness.matrix() == p.cast<Complex>());
  }
  SUBCASE("cyclic half is refuted") {
    const auto r = certify_unistochastic(cyclic_half());
    CHECK(std::holds_alternative<Refuted>(r));
    CertifyOptions opts;
    opts.restarts = 8;
    CHECK(std::sqrt(optimize_phases(cyclic_half(), opts).objective) > 1e-4);
  }
  SUBCASE("not doubly stochastic is refuted") {
    const auto r = certify_unistochastic(validate_stochastic(rm(2, {1.0, 0.5, 0.0, 0.5})));
    REQUIRE(std::holds_alternative<Refuted>(r));
    CHECK(std::get<Refuted>(r).reason.find("doubly") != std::string::npos);
  }
  SUBCASE("Haar 4x4") {
    CounterRng rng(99);
    for (int t = 0; t < 5; ++t) {
      const auto pi = unistochastic_from_unitary(haar_unitary(4, rng));
      const auto r = certify_unistochastic(pi);
      REQUIRE(std::holds_alternative<UnistochasticCertificate>(r));
      const auto& c = std::get<UnistochasticCertificate>(r);
      CHECK(c.residual <= 1e-8);
      CHECK(c.method == CertifyMethod::phase_optimization);
      CHECK(is_unitary(c.witness.matrix(), 1e-10));
    }
  }
  SUBCASE("uniform 3x3 and 2x2 constructions") {
    const auto r3 = certify_unistochastic(validate_stochastic(RealMatrix(RealMatrix::Constant(3, 3, 1.0 / 3))));
    REQUIRE(std::holds_alternative<UnistochasticCertificate>(r3));
    CHECK(std::get<UnistochasticCertificate>(r3).residual < 1e-15);
    const auto r2 = certify_unistochastic(validate_stochastic(rm(2, {0.3, 0.7, 0.7, 0.3})));
    REQUIRE(std::holds_alternative<UnistochasticCertificate>(r2));
    CHECK(std::get<UnistochasticCertificate>(r2).residual < 1e-15);
  }
  SUBCASE("bad options") {
    CertifyOptions o;
    o.restarts = 0;
    CHECK_THROWS_AS(certify_unistochastic(cyclic_half(), o), PreconditionError);
  }
}

TEST_CASE("3x3 exact witness on Haar matrices") {
  CounterRng rng(31);
  for (int t = 0; t < 100; ++t) {
    const auto pi = unistochastic_from_unitary(haar_unitary(3, rng));
    CHECK(unistochastic_oracle_3x3(pi));
    const auto r = certify_unistochastic(pi);
    REQUIRE(std::holds_alternative<UnistochasticCertificate>(r));
    CHECK(std::get<UnistochasticCertificate>(r).method == CertifyMethod::exact_3x3);
    CHECK(std::get<UnistochasticCertificate>(r).residual <= 1e-11);
  }
}

TEST_CASE("3x3 oracle agrees with phase optimization") {
  CounterRng rng(1000);
  CertifyOptions opts;
  opts.restarts = 8;
  opts.max_iters = 2000;
  int agree = 0, false_negative = 0, oracle_true = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto pi = validate_stochastic(random_doubly_stochastic(3, rng, 1 + t % 4));
    const bool oracle = unistochastic_oracle_3x3(pi);
    opts.seed = static_cast<std::uint64_t>(t);
    const bool optimized = optimize_phases(pi, opts).objective <= opts.tol_certify * opts.tol_certify;
    oracle_true += oracle;
    CHECK_FALSE((optimized && !oracle));  // no false positives
    if (oracle && !optimized) ++false_negative;
    agree += oracle == optimized;
  }
  MESSAGE("oracle true: ", oracle_true, ", agreement: ", agree, "/1000, restart-budget misses: ", false_negative);
  CHECK(oracle_true > 0);
  CHECK(oracle_true < 1000);
  CHECK(false_negative <= 10);
}

TEST_CASE("gleason_pure_state_check") {
  CounterRng rng(17);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 2 + t % 5;
    const auto p = projector_from_vector(random_unit_vector(n, rng));
    CHECK(gleason_pure_state_check(DensityMatrix(p.matrix()), p));
  }
  ComplexVector e0 = ComplexVector::Zero(2), e1 = ComplexVector::Zero(2);
  e0(0) = 1.0;
  e1(1) = 1.0;
  const auto p = projector_from_vector(e0), q = projector_from_vector(e1);
  const DensityMatrix mixed(0.999 * p.matrix() + 0.001 * q.matrix());
  try {
    gleason_pure_state_check(mixed, p);
    FAIL("expected precondition failure");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("0.999") != std::string::npos);
  }
  CHECK_THROWS_AS(DensityMatrix(ComplexMatrix(ComplexMatrix::Identity(2, 2))), ValidationError);
  ComplexMatrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(DensityMatrix{neg}, ValidationError);
}

TEST_CASE("transition JSON") {
  const auto pi = validate_stochastic(rm(2, {0.25, 0.5, 0.75, 0.5}));
  const auto j = transition_to_json(pi);
  CHECK(j["convention"] == "column");
  CHECK(j["p"][1][0] == 0.75);
  CHECK(transition_from_json(j).matrix() == pi.matrix());
  CHECK_THROWS_AS(transition_from_json(nlohmann::json::parse(R"({"n":2,"p":[[1,0]]})")), ParseError);
  CHECK_THROWS_AS(transition_from_json(nlohmann::json::parse(R"({"n":2,"convention":"row","p":[[1,0],[0,1]]})")),
                  ParseError);
}
