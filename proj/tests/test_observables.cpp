#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qet/lattice.hpp"
#include "qet/observables.hpp"
#include "qet/window.hpp"

using namespace qet;

namespace {

double max_diff(const ComplexField& a, const ComplexField& b, cplx scale_b = 1.0) {
  double d = 0;
  for (std::size_t k = 0; k < a.values().size(); ++k)
    d = std::max(d, std::abs(a.values()[k] - scale_b * b.values()[k]));
  return d;
}

}  // namespace

TEST_CASE("multiplicative operators") {
  const auto g = make_grid(0, 6, 8, -4, 4, 8);
  const auto f = gaussian_event(g, {3, 0.5, 0, 0.5, 0, 0}).field();
  const auto tf = apply(OperatorSpec::time(), f);
  const auto xf = apply(OperatorSpec::position(), f);
  CHECK(tf(3, 4) == g.t(3) * f(3, 4));
  CHECK(xf(3, 4) == g.x(4) * f(3, 4));
  CHECK(max_diff(apply(OperatorSpec::identity(), f), f) == 0.0);
}

TEST_CASE("spectral derivatives are exact on grid plane waves") {
  const auto g = make_grid(0, 8, 32, 0, 8, 32);
  const double E = 5 * g.dE(), p = 3 * g.dp();
  const auto pw = plane_wave(g, E, p).field();
  CHECK(max_diff(apply(OperatorSpec::energy(DerivativeScheme::spectral), pw), pw, E) < 1e-12);
  CHECK(max_diff(apply(OperatorSpec::momentum(DerivativeScheme::spectral), pw), pw, p) < 1e-12);
  const HamiltonianSpec h{2.0, Potential::zero()};
  CHECK(max_diff(apply(OperatorSpec::hamiltonian_op(h, DerivativeScheme::spectral), pw), pw,
                 p * p / 4.0) < 1e-12);
}

TEST_CASE("finite-difference momentum converges at second order") {
  auto err = [](std::size_t n) {
    const auto g = make_grid(0, 1, 2, -10, 10, n);
    const auto f = gaussian_event(g, {0.5, 5, 0, 1, 0, 0.8, 1.0}).field();
    const auto fd = apply(OperatorSpec::momentum(DerivativeScheme::finite_difference), f);
    const auto sp = apply(OperatorSpec::momentum(DerivativeScheme::spectral), f);
    return max_diff(fd, sp);
  };
  CHECK(err(64) / err(128) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("potentials") {
  CHECK(Potential::harmonic(2.0, 3.0, 1.0)(0.0, 2.0) == doctest::Approx(9.0));
  CHECK(Potential::gaussian(0.5, 1.0, 2.0)(0.0, 3.0) == doctest::Approx(0.5 * std::exp(-0.5)));
  CHECK(Potential::driven_harmonic(1, 1, 2, 1)(0.0, 1.0) == doctest::Approx(0.5));
  CHECK(Potential::zero().is_zero());
  CHECK(Potential::gaussian(1, 0, 1).scaled(0.25)(0, 0) == doctest::Approx(0.25));
  CHECK(Potential::driven_harmonic(1, 1, 2, 1).time_dependent());
}

TEST_CASE("current density") {
  const auto g = make_grid(0, 1, 2, 0, 8, 32);
  const double p = 2 * g.dp(), mass = 0.5;
  const auto pw = plane_wave(g, 0, p).field();
  const auto j = current_density(pw, mass, DerivativeScheme::spectral);
  const double amp2 = std::norm(pw(0, 0));
  for (double v : j) CHECK(v == doctest::Approx(p / mass * amp2));
}

TEST_CASE("window uncertainty") {
  const auto g = make_grid(0, 10, 128, -10, 10, 64);
  const auto f = gaussian_event(g, {5, 0.8, 1, 1.5, 0, 0}).field();
  const auto whole = ObservationWindow::whole_grid(g);
  CHECK(uncertainty(OperatorSpec::position(), f, whole) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(uncertainty(OperatorSpec::time(), f, whole) == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(uncertainty(OperatorSpec::identity(), f, whole) == doctest::Approx(0.0));
  ComplexField zero(g);
  CHECK_THROWS(uncertainty(OperatorSpec::position(), zero, whole));
}

TEST_CASE("scheme names round-trip") {
  for (auto s : {DerivativeScheme::spectral, DerivativeScheme::finite_difference})
    CHECK(derivative_scheme_from_string(to_string(s)) == s);
  CHECK_THROWS(derivative_scheme_from_string("upwind"));
}
