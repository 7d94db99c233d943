#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qet/lattice.hpp"
#include "qet/window.hpp"

using namespace qet;

TEST_CASE("grid spacing and folded dual grid") {
  const auto g = make_grid(0, 8, 16, -4, 4, 8, 2.0);
  CHECK(g.dt() == doctest::Approx(0.5));
  CHECK(g.dx() == doctest::Approx(1.0));
  CHECK(g.dp() == doctest::Approx(2 * std::numbers::pi * 2.0 / 8.0));
  CHECK(folded_index(0, 8) == 0);
  CHECK(folded_index(3, 8) == 3);
  CHECK(folded_index(4, 8) == -4);
  CHECK(folded_index(7, 8) == -1);
  CHECK(g.momentum(7) == doctest::Approx(-g.dp()));
  CHECK(g.time_index(2.5) == 5);
  CHECK_THROWS_AS(g.time_index(2.3), std::invalid_argument);
}

TEST_CASE("malformed grids are rejected") {
  CHECK_THROWS_AS(make_grid(0, 1, 1, 0, 1, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1, 1, 8, 0, 1, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0, 1, 8, 0, 1, 8, -1.0), std::invalid_argument);
}

TEST_CASE("gaussian event is normalized and the transform is unitary") {
  const auto g = make_grid(0, 10, 64, -10, 10, 32);
  const auto psi = gaussian_event(g, {5, 0.7, 0.5, 1.1, 0.3, -0.4});
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const auto tilde = to_energy_momentum(psi);
  CHECK(tilde.representation() == Representation::energy_momentum);
  CHECK(tilde.norm() == doctest::Approx(1.0).epsilon(1e-10));
  const auto back = from_energy_momentum(tilde);
  double d = 0;
  for (std::size_t k = 0; k < g.size(); ++k) d = std::max(d, std::abs(back.values()[k] - psi.values()[k]));
  CHECK(d < 1e-12);
}

TEST_CASE("a grid-commensurate plane wave lands in one Fourier cell") {
  const auto g = make_grid(0, 4, 16, 0, 8, 16);
  const auto pw = plane_wave(g, 3 * g.dE(), -2 * g.dp());
  CHECK(pw.improper());
  const auto tilde = to_energy_momentum(pw);
  double total = 0, peak = 0;
  for (std::size_t a = 0; a < g.n_t(); ++a)
    for (std::size_t b = 0; b < g.n_x(); ++b) {
      total += std::norm(tilde(a, b));
      peak = std::max(peak, std::norm(tilde(a, b)));
    }
  CHECK(peak / total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::norm(tilde(3, g.n_x() - 2)) == doctest::Approx(peak));
}

TEST_CASE("gaussian wider than the grid is refused") {
  const auto g = make_grid(0, 2, 32, -2, 2, 32);
  GaussianEventParams p{1, 2.0, 0, 0.3, 0, 0};
  CHECK(gaussian_lost_mass(g, p) > 1e-6);
  CHECK_THROWS_AS(gaussian_event(g, p), std::invalid_argument);
}

TEST_CASE("sharp event integrates over time to its state") {
  const auto g = make_grid(0, 1, 10, -5, 5, 32);
  const auto state = gaussian_state(g, 0, 1, 0.5);
  CHECK(slice_norm2(state, g.dx()) == doctest::Approx(1.0).epsilon(1e-10));
  const auto ev = sharp_event(g, 4, state);
  CHECK(std::abs(ev(4, 7) * g.dt() - state[7]) < 1e-15);
  CHECK(std::abs(ev(3, 7)) == 0.0);
  const auto [first, last] = ev.time_support();
  CHECK(first == 4);
  CHECK(last == 4);
}

TEST_CASE("observation windows") {
  const auto g = make_grid(0, 10, 10, 0, 10, 10);
  const auto w = ObservationWindow::box(g, 2, 4, 3, 5);
  CHECK(w.contains(2, 3));
  CHECK(w.contains(4, 5));
  CHECK_FALSE(w.contains(5, 3));
  CHECK(ObservationWindow::box(g, 2.2, 2.8, 0, 10).empty());
  CHECK_THROWS_AS(ObservationWindow(g, {{0, 3, 0, 9}, {2, 5, 0, 9}}), std::invalid_argument);
  const auto s = ObservationWindow::sharp(g, 6);
  CHECK(s.time_range()->first == 6);
  CHECK(s.time_range()->second == 6);
}
