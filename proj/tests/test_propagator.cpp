#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qet/lattice.hpp"
#include "qet/propagator.hpp"

using namespace qet;

namespace {

double max_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

const HamiltonianSpec harmonic{1.0, Potential::harmonic(1.0, 0.8)};

}  // namespace

TEST_CASE("both integrators are unitary and reversible") {
  const auto g = make_grid(0, 5, 100, -12, 12, 96);
  const auto psi0 = gaussian_state(g, -1, 0.8, 1.5);
  for (auto integ : {Integrator::crank_nicolson, Integrator::split_step}) {
    const EvolutionKernel k(g, harmonic, integ);
    const auto out = evolve_indices(k, psi0, 0, 99);
    CHECK(slice_norm2(out, g.dx()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(max_diff(evolve_indices(k, out, 99, 0), psi0) < 1e-10);
    CHECK(max_diff(evolve(k, psi0, 0.0, 2.5), evolve_indices(k, psi0, 0, 50)) == 0.0);
  }
}

TEST_CASE("both integrators converge at second order in dt") {
  for (auto integ : {Integrator::crank_nicolson, Integrator::split_step}) {
    auto final_state = [&](std::size_t n_t) {
      // last node at t = 2 on every grid
      const auto g = make_grid(0, 2.0 * n_t / (n_t - 1), n_t, -12, 12, 128);
      const EvolutionKernel k(g, harmonic, integ);
      return evolve_indices(k, gaussian_state(g, 0, 1, 1), 0, n_t - 1);
    };
    const auto ref = final_state(513);
    const double ratio = max_diff(final_state(33), ref) / max_diff(final_state(65), ref);
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
  }
}

TEST_CASE("orbit variants split at the source") {
  const auto g = make_grid(0, 4, 40, -10, 10, 64);
  const EvolutionKernel k(g, harmonic);
  const auto src = sharp_event(g, 15, gaussian_state(g, 0, 1, 0));
  const auto full = make_orbit(k, src, OrbitVariant::full);
  const auto ret = make_orbit(k, src, OrbitVariant::retarded);
  const auto adv = make_orbit(k, src, OrbitVariant::advanced);
  for (std::size_t j = 0; j < g.n_x(); ++j) {
    CHECK(std::abs(ret.psi(14, j)) == 0.0);
    CHECK(std::abs(adv.psi(15, j)) == 0.0);
  }
  std::vector<cplx> sum(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) sum[i] = ret.psi.values()[i] + adv.psi.values()[i];
  CHECK(max_diff(sum, full.psi.values()) < 1e-14);
  CHECK(conserved_charge(full).charge == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(conserved_range(ret).first == 15);
  CHECK(conserved_range(adv).second == 14);
}

TEST_CASE("charge tolerance violations throw") {
  const auto g = make_grid(0, 4, 40, -10, 10, 64);
  const EvolutionKernel k(g, harmonic);
  auto orbit = make_orbit(k, sharp_event(g, 15, gaussian_state(g, 0, 1, 0)), OrbitVariant::full);
  CHECK_NOTHROW(conserved_charge(orbit, 1e-10));
  for (std::size_t j = 0; j < g.n_x(); ++j) orbit.psi(30, j) *= 1.01;
  CHECK_THROWS_AS(conserved_charge(orbit, 1e-6), QetError);
}

TEST_CASE("Schrodinger residual separates solutions from noise") {
  const auto g = make_grid(0, 4, 200, -10, 10, 64);
  const EvolutionKernel k(g, harmonic);
  const auto orbit = make_orbit(k, sharp_event(g, 0, gaussian_state(g, 1, 1, 0)), OrbitVariant::full);
  CHECK(schrodinger_residual(orbit.psi, harmonic) < 0.05);
  ComplexField noise(g);
  for (std::size_t i = 0; i < g.n_t(); ++i)
    for (std::size_t j = 0; j < g.n_x(); ++j) noise(i, j) = std::sin(1.7 * i + 0.3 * j * j);
  CHECK(schrodinger_residual(noise, harmonic) > 1.0);
}

TEST_CASE("enum names round-trip") {
  for (auto v : {OrbitVariant::full, OrbitVariant::retarded, OrbitVariant::advanced})
    CHECK(orbit_variant_from_string(to_string(v)) == v);
  for (auto v : {Integrator::crank_nicolson, Integrator::split_step})
    CHECK(integrator_from_string(to_string(v)) == v);
  CHECK_THROWS(integrator_from_string("euler"));
}
