#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qet/measurement.hpp"
#include "qet/propagator.hpp"

using namespace qet;

namespace {

const HamiltonianSpec harmonic{1.0, Potential::harmonic(1.0, 1.0)};

SpacetimeGrid grid() { return make_grid(0, 4, 64, -10, 10, 64); }

}  // namespace

TEST_CASE("partitions resolve the identity; incomplete ones are rejected") {
  const auto g = grid();
  CHECK_NOTHROW(validate_partition(position_partition({-1, 2}), g));
  CHECK_NOTHROW(validate_partition(momentum_partition({0}), g));
  CHECK_NOTHROW(validate_partition(energy_partition(g, harmonic, {1.0, 3.0}), g));
  CHECK_NOTHROW(validate_partition(identity_partition(), g));
  auto incomplete = position_partition({-1, 2});
  incomplete.pop_back();
  CHECK_THROWS_AS(validate_partition(incomplete, g), QetError);
  auto overlapping = position_partition({0});
  overlapping.push_back(position_partition({0}).front());
  CHECK_THROWS_AS(validate_partition(overlapping, g), QetError);
}

TEST_CASE("probabilities, collapse and empty windows") {
  const auto g = grid();
  const EvolutionKernel k(g, harmonic);
  const auto orbit = make_orbit(k, sharp_event(g, 0, gaussian_state(g, 1, 1, 0)), OrbitVariant::full);
  const CompleteMeasurement m{position_partition({0}, {"left", "right"}),
                              ObservationWindow::time_interval(g, 1, 2)};
  const auto probs = outcome_probabilities(m, orbit.psi);
  REQUIRE(probs.size() == 2);
  CHECK(probs[0].label == "left");
  CHECK(probs[0].probability + probs[1].probability == doctest::Approx(1.0).epsilon(1e-12));
  const auto out = collapse(m, orbit.psi, 1);
  CHECK(out.norm() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < g.n_t(); ++i)
    for (std::size_t j = 0; j < g.n_x(); ++j)
      if (!m.window.contains(i, j) || g.x(j) < 0) CHECK(std::abs(out(i, j)) == 0.0);

  const auto retarded = make_orbit(k, sharp_event(g, 40, gaussian_state(g, 1, 1, 0)),
                                   OrbitVariant::retarded);
  CHECK_THROWS_AS(window_weight(retarded.psi, ObservationWindow::time_interval(g, 0, 1)),
                  ImproperWindowError);
}

TEST_CASE("an eigenstate is found in its own energy bin with certainty") {
  const auto g = grid();
  const auto eig = hamiltonian_eigensystem(g, harmonic);
  CHECK(eig->energies[0] == doctest::Approx(0.5).epsilon(0.01));
  const EvolutionKernel k(g, harmonic);
  const auto orbit = make_orbit(k, sharp_event(g, 0, eig->state(1)), OrbitVariant::full);
  const CompleteMeasurement m{energy_partition(g, harmonic, {1.0, 2.0}),
                              ObservationWindow::sharp(g, 30)};
  const auto probs = outcome_probabilities(m, orbit.psi);
  CHECK(probs[1].probability == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("histories are deterministic in the seed") {
  const auto g = grid();
  const EvolutionKernel k(g, harmonic);
  const auto initial = sharp_event(g, 0, gaussian_state(g, 0, 1.5, 1));
  const std::vector<CompleteMeasurement> stages{
      {position_partition({-1, 1}), ObservationWindow::sharp(g, 10)},
      {momentum_partition({0}), ObservationWindow::sharp(g, 30)}};
  const auto a = run_history(k, initial, stages, OrbitVariant::retarded, 42);
  const auto b = run_history(k, initial, stages, OrbitVariant::retarded, 42);
  REQUIRE(a.stages.size() == 2);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(a.stages[s].outcome_index == b.stages[s].outcome_index);
    CHECK(a.stages[s].probability == b.stages[s].probability);
  }
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 50 && !differs; ++seed) {
    const auto c = run_history(k, initial, stages, OrbitVariant::retarded, seed);
    differs = c.stages[0].outcome_index != a.stages[0].outcome_index;
  }
  CHECK(differs);
}

TEST_CASE("history windows must be ordered in time") {
  const auto g = grid();
  const std::vector<CompleteMeasurement> reversed{
      {identity_partition(), ObservationWindow::sharp(g, 30)},
      {identity_partition(), ObservationWindow::sharp(g, 10)}};
  CHECK_THROWS_AS(validate_history_windows(reversed), std::invalid_argument);
  const std::vector<CompleteMeasurement> overlapping{
      {identity_partition(), ObservationWindow::time_interval(g, 1, 2)},
      {identity_partition(), ObservationWindow::time_interval(g, 1.5, 3)}};
  CHECK_THROWS_AS(validate_history_windows(overlapping), std::invalid_argument);
}
