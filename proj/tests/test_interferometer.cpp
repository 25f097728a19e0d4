#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "csm/interferometer.hpp"
#include "csm/stochastic.hpp"

using namespace csm;

namespace {

constexpr double kPi = std::numbers::pi;

// 0→2, 1→0, 2→1 by two full swaps.
Network cyclic_permutation() {
  return {3, {BeamSplitter{0, 1, kPi / 2, 0.0}, BeamSplitter{1, 2, kPi / 2, 0.0}}};
}

Network balanced() { return {2, {BeamSplitter{0, 1, kPi / 4, 0.0}}}; }

}  // namespace

TEST_CASE("network_unitary examples") {
  CHECK((network_unitary({4, {}}).matrix() - ComplexMatrix::Identity(4, 4)).norm() == 0.0);

  ComplexMatrix expect(2, 2);
  expect << 1, -1, 1, 1;
  expect /= std::sqrt(2.0);
  CHECK((network_unitary(balanced()).matrix() - expect).norm() < 1e-15);

  const Network there_and_back{3, {BeamSplitter{0, 2, 0.7, 1.3}, BeamSplitter{0, 2, -0.7, 1.3}}};
  CHECK((network_unitary(there_and_back).matrix() - ComplexMatrix::Identity(3, 3)).norm() < 1e-12);

  // Element order: the first element acts first.
  const Network ordered{2, {PhaseShifter{0, 0.5}, BeamSplitter{0, 1, 0.3, 0.2}}};
  ComplexMatrix ps = ComplexMatrix::Identity(2, 2);
  ps(0, 0) = std::polar(1.0, 0.5);
  CHECK((network_unitary(ordered).matrix() - beam_splitter_block(0.3, 0.2) * ps).norm() < 1e-15);

  CHECK_THROWS_AS(network_unitary({2, {BeamSplitter{0, 2, 0.1, 0.0}}}), ValidationError);
  CHECK_THROWS_AS(network_unitary({2, {BeamSplitter{1, 1, 0.1, 0.0}}}), ValidationError);
  CHECK_THROWS_AS(network_unitary({2, {PhaseShifter{-1, 0.1}}}), ValidationError);
}

TEST_CASE("reck_decompose examples") {
  const auto id = reck_decompose(UnitaryMatrix::identity(4));
  CHECK(beam_splitter_count(id) == 0);
  for (const auto& e : id.elements) CHECK(std::get<PhaseShifter>(e).phi == 0.0);

  const double theta = 0.37;
  ComplexMatrix rot(2, 2);
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  const auto r = reck_decompose(UnitaryMatrix(rot));
  REQUIRE(beam_splitter_count(r) == 1);
  const auto& bs = std::get<BeamSplitter>(r.elements.back());
  CHECK(bs.theta == doctest::Approx(theta).epsilon(1e-14));
  CHECK(std::abs(bs.phi) < 1e-14);
  CHECK((network_unitary(r).matrix() - rot).norm() < 1e-14);
}

TEST_CASE("reck round trip on Haar unitaries") {
  CounterRng rng(1234);
  for (int trial = 0; trial < 70; ++trial) {
    const Eigen::Index n = 2 + trial % 7;
    const auto u = haar_unitary(n, rng);
    const auto net = reck_decompose(u);
    CHECK(beam_splitter_count(net) <= static_cast<std::size_t>(n * (n - 1) / 2));
    CHECK(net.elements.size() - beam_splitter_count(net) == static_cast<std::size_t>(n));
    CHECK((network_unitary(net).matrix() - u.matrix()).norm() <= 1e-9);
    // Deterministic.
    CHECK(network_to_json(reck_decompose(u)) == network_to_json(net));
  }
}

TEST_CASE("measurement") {
  CounterRng rng(5);
  const auto frame = computational_frame(4);
  const auto e2 = PureState::basis(4, 2);
  const auto m = measure_nondestructive(e2, frame, rng);
  CHECK(m.outcome == 2);
  CHECK(m.probability == 1.0);
  CHECK((m.state.amplitudes() - e2.amplitudes()).norm() == 0.0);

  ComplexVector plus = ComplexVector::Zero(2);
  plus << 1.0, 1.0;
  const auto p = outcome_probabilities(PureState::normalized(plus), computational_frame(2));
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(PureState{plus}, ValidationError);
  CHECK_THROWS_AS(outcome_probabilities(e2, computational_frame(3)), DimensionError);
}

TEST_CASE("repeat measurement in the same context gives the same outcome") {
  CounterRng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = 2 + trial % 5;
    const auto frame = frame_from_unitary(haar_unitary(n, rng));
    const auto psi = PureState::normalized(random_unit_vector(n, rng));
    const auto first = measure_nondestructive(psi, frame, rng);
    const auto second = measure_nondestructive(first.state, frame, rng);
    CHECK(second.outcome == first.outcome);
    CHECK(second.probability == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("outcome probabilities sum to one") {
  CounterRng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 7;
    const auto p = outcome_probabilities(PureState::normalized(random_unit_vector(n, rng)),
                                         frame_from_unitary(haar_unitary(n, rng)));
    double total = 0.0;
    for (double x : p) total += x;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("run_experiment") {
  SUBCASE("permutation") {
    for (std::size_t line = 0; line < 3; ++line) {
      ExperimentConfig cfg{3, "C1", line, "C2", cyclic_permutation(), 1000, 9};
      const auto r = run_experiment(cfg);
      const std::size_t target = (line + 2) % 3;
      CHECK(r.counts[target] == 1000);
      CHECK(r.frequency[target] == 1.0);
    }
  }
  SUBCASE("balanced") {
    ExperimentConfig cfg{2, "C1", 0, "C2", balanced(), 100000, 42};
    const auto r = run_experiment(cfg);
    const double sigma = std::sqrt(0.25 / 100000.0);
    CHECK(std::abs(r.frequency[0] - 0.5) <= 5 * sigma);
    CHECK(std::abs(r.frequency[1] - 0.5) <= 5 * sigma);
    CHECK(r.born[0] == doctest::Approx(0.5));
    CHECK(r.counts[0] + r.counts[1] == 100000);
  }
  SUBCASE("no shots") {
    ExperimentConfig cfg{2, "C1", 0, "C2", balanced(), 0, 0};
    const auto r = run_experiment(cfg);
    CHECK(r.counts == std::vector<std::uint64_t>{0, 0});
    CHECK(r.born[1] == doctest::Approx(0.5));
    std::ostringstream csv;
    write_histogram_csv(csv, r);
    CHECK(csv.str() == "outcome,count,frequency,born,zscore\n0,0,0.0000000000,0.5000000000,0.000000\n"
                       "1,0,0.0000000000,0.5000000000,0.000000\n");
  }
  SUBCASE("records and determinism") {
    ExperimentConfig cfg{2, "C1", 1, "C2", balanced(), 50, 3, true};
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    REQUIRE(a.records.size() == 50);
    for (std::size_t k = 0; k < 50; ++k) {
      CHECK(a.records[k].outcome == b.records[k].outcome);
      CHECK(a.records[k].shot == k);
      CHECK(a.records[k].context == "C2");
    }
    cfg.seed = 4;
    CHECK(run_experiment(cfg).counts != a.counts);
  }
}

TEST_CASE("empirical transition matches the unistochastic matrix") {
  CounterRng rng(31);
  const auto u = haar_unitary(4, rng);
  const auto net = reck_decompose(u);
  const auto expect = unistochastic_from_unitary(network_unitary(net));
  const std::uint64_t shots = 20000;
  for (std::size_t i = 0; i < 4; ++i) {
    ExperimentConfig cfg{4, "C1", i, "C2", net, shots, 100 + i};
    const auto r = run_experiment(cfg);
    for (std::size_t j = 0; j < 4; ++j) {
      const double p = expect(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(shots));
      CHECK(std::abs(r.frequency[j] - p) <= 5 * sigma + 1e-12);
    }
  }
}

TEST_CASE("outcome probabilities vary continuously with the mixing angle") {
  // p(1 | 0) = sin²θ, whose derivative is bounded by 1.
  const double delta = 1e-6;
  for (int k = 0; k <= 100; ++k) {
    const double theta = (kPi / 2) * k / 100.0;
    auto prob = [](double t) {
      const auto u = network_unitary({2, {BeamSplitter{0, 1, t, 0.3}}});
      return outcome_probabilities(PureState(u.matrix().col(0)), computational_frame(2))[1];
    };
    CHECK(std::abs(prob(theta + delta) - prob(theta)) <= 1.0 * delta + 1e-12);
  }
}

TEST_CASE("extravalence_links_from_network") {
  const auto links = extravalence_links_from_network(cyclic_permutation());
  REQUIRE(links.size() == 3);
  CHECK(links[0] == std::pair<Modality, Modality>{{"C1", 0}, {"C2", 2}});
  CHECK(links[1] == std::pair<Modality, Modality>{{"C1", 1}, {"C2", 0}});
  CHECK(links[2] == std::pair<Modality, Modality>{{"C1", 2}, {"C2", 1}});

  CHECK(extravalence_links_from_network(balanced()).empty());

  const Network block{4, {BeamSplitter{0, 1, kPi / 2, 0.4}, BeamSplitter{2, 3, kPi / 4, 0.0}}};
  CHECK(extravalence_links_from_network(block).size() == 2);

  // The links feed the registry without exclusivity problems.
  ExtravalenceRegistry reg({3});
  reg.register_context(Context{"C1", {"a", "b", "c"}, std::nullopt});
  reg.register_context(Context{"C2", {"a", "b", "c"}, std::nullopt});
  for (const auto& [x, y] : links) reg.link_certain(x, y);
  CHECK(reg.class_count() == 3);
}

TEST_CASE("experiment JSON") {
  const auto j = nlohmann::json::parse(R"({
    "n": 3, "prepare": {"context": "A", "outcome": 1},
    "network": [{"bs": [0, 1], "theta": 0.5, "phi": 0.1}, {"ps": 2, "phi": -0.3}],
    "shots": 10, "seed": 7})");
  const auto cfg = experiment_from_json(j);
  CHECK(cfg.n == 3);
  CHECK(cfg.prepare_context == "A");
  CHECK(cfg.prepare_outcome == 1);
  CHECK(cfg.network.elements.size() == 2);
  CHECK(cfg.shots == 10);
  CHECK(cfg.seed == 7);
  CHECK(experiment_from_json(experiment_to_json(cfg)).network.elements.size() == 2);

  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"n":2,"prepare":{"outcome":5}})")),
                  ValidationError);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"n":2,"network":[{"bs":[0,3],"theta":1}]})")),
                  ValidationError);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"n":2,"network":[{"mirror":1}]})")), ParseError);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"prepare":{}})")), ParseError);
}
