#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qet/perturbation.hpp"

using namespace qet;

namespace {

constexpr double pi = std::numbers::pi;

double max_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace

TEST_CASE("Dyson series sums to the exact retarded orbit") {
  const auto g = make_grid(0, 4, 128, -10, 10, 64);
  auto free = std::make_shared<EvolutionKernel>(g, HamiltonianSpec{1.0, Potential::zero()});
  const auto v = Potential::gaussian(0.3, 0, 1);
  const auto src = gaussian_event(g, {1.5, 0.3, -2, 1, 0.5, 1});
  const auto exact = make_orbit(PerturbedKernel(free, v), src, OrbitVariant::retarded);
  const auto series = dyson_orbit(*free, v, src, 14);
  CHECK(max_diff(series.psi.values(), exact.psi.values()) < 1e-10);
  const auto terms = dyson_terms(*free, v, src, 1);
  const auto half = dyson_terms(*free, v.scaled(0.5), src, 1);
  // first order is linear in the coupling
  for (std::size_t k = 0; k < g.size(); k += 97)
    CHECK(std::abs(terms[1].values()[k] - 2.0 * half[1].values()[k]) < 1e-13);
}

TEST_CASE("golden-rule rate of a flat continuum") {
  const auto model = DiscreteContinuumModel::flat(0, -5, 5, 512, 2.0, 0.1, 1.0);
  const auto rate = golden_rule_rate(model, 0);
  CHECK(rate.gamma == doctest::Approx(2 * pi * 2.0 * 0.01));
  const auto outside = DiscreteContinuumModel::flat(7, -5, 5, 512, 2.0, 0.1, 1.0);
  CHECK(golden_rule_rate(outside, 0).gamma == 0.0);
  auto bad = model;
  bad.omega.pop_back();
  CHECK_THROWS(bad.validate());
}

TEST_CASE("exact survival decays at the golden-rule rate") {
  const auto model = DiscreteContinuumModel::flat(0, -5, 5, 512, 1.0, 0.1, 1.0);
  const auto cmp = compare_golden_rule(model, 0);
  CHECK(cmp.relative_error < 0.05);
}

TEST_CASE("Born matrix elements") {
  ScatteringSetup s;
  s.potential = Potential::gaussian(0.1, 0, 1);
  const double q = 3 * s.dp();
  // Gaussian Fourier transform: A w/(√(2π) ħ) e^{-(q w/ħ)²/2}
  const cplx v = potential_matrix_element(s, q, 0);
  CHECK(v.real() == doctest::Approx(0.1 / std::sqrt(2 * pi) * std::exp(-0.5 * q * q)).epsilon(1e-10));
  CHECK(std::abs(v.imag()) < 1e-12);
  CHECK(finite_time_delta(10, 0) == doctest::Approx(10 / (2 * pi)));
  ScatteringSetup zero;
  const auto b = born_smatrix(zero, q, q);
  CHECK(std::abs(b.value) * zero.dp() == doctest::Approx(1.0));
  CHECK(b.on_shell);
  CHECK_FALSE(born_smatrix(zero, q, 2 * q).on_shell);
}
