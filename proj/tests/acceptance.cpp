// Acceptance suite: ten criteria, one PASS/FAIL line each. Exit status is the
// number of failing criteria. `qet_acceptance N...` runs selected criteria only.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qet/lattice.hpp"
#include "qet/measurement.hpp"
#include "qet/observables.hpp"
#include "qet/perturbation.hpp"
#include "qet/propagator.hpp"
#include "qet/window.hpp"

using namespace qet;

namespace {

struct Verdict {
  bool passed;
  std::string detail;
};

double relative(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

// --- 1: sharp-time limit ----------------------------------------------------

Verdict standard_qm_limit() {
  const double x0 = 2, sigma0 = 1, p0 = 1, mass = 1;
  const auto g = make_grid(0, 8, 512, -40, 40, 256);
  const EvolutionKernel k(g, HamiltonianSpec{mass, Potential::zero()}, Integrator::split_step);
  const auto source = sharp_event(g, 0, gaussian_state(g, x0, sigma0, p0));
  const auto orbit = make_orbit(k, source, OrbitVariant::full);
  const auto x = OperatorSpec::position();
  double worst_mean = 0, worst_width = 0;
  for (std::size_t i = 0; i < g.n_t(); ++i) {
    const auto w = ObservationWindow::sharp(g, i);
    const double t = g.t(i);
    const double spread = g.hbar() * t / (2 * mass * sigma0 * sigma0);
    worst_mean = std::max(worst_mean, relative(expectation(x, orbit.psi, w), x0 + p0 * t / mass));
    worst_width = std::max(worst_width, relative(uncertainty(x, orbit.psi, w),
                                                 sigma0 * std::sqrt(1 + spread * spread)));
  }
  return {worst_mean < 1e-3 && worst_width < 1e-3,
          fmt::format("max rel err <x> {:.2e}, dx {:.2e} (< 1e-3)", worst_mean, worst_width)};
}

// --- 2: conserved charge ----------------------------------------------------

Verdict conserved_charge_criterion() {
  const auto g = make_grid(0, 10, 512, -30, 30, 256);
  const EvolutionKernel k(g, HamiltonianSpec{1.0, Potential::zero()});
  const auto event = gaussian_event(g, {5, 0.5, 0, 1, 0.5, 1});
  const auto orbit = make_orbit(k, event, OrbitVariant::full);
  const auto charge = conserved_charge(orbit);

  // N = Σ_{s,s'} ⟨Ψ_s|U(s,s')Ψ_s'⟩ dt² dx, one propagation sweep per source slice.
  const double dt = g.dt(), dx = g.dx();
  cplx brute{0, 0};
  for (std::size_t sp = 0; sp < g.n_t(); ++sp) {
    const auto src = event.slice(sp);
    std::vector<cplx> fwd(src.begin(), src.end()), bwd = fwd;
    brute += slice_inner(event.slice(sp), fwd, dx);
    for (std::size_t s = sp; s + 1 < g.n_t(); ++s) {
      k.step(fwd, s, +1);
      brute += slice_inner(event.slice(s + 1), fwd, dx);
    }
    for (std::size_t s = sp; s > 0; --s) {
      k.step(bwd, s, -1);
      brute += slice_inner(event.slice(s - 1), bwd, dx);
    }
  }
  brute *= dt * dt;
  const double n_err = relative(charge.charge, brute.real());
  return {charge.max_relative_deviation < 1e-6 && n_err < 1e-6 &&
              std::abs(brute.imag()) < 1e-6 * brute.real(),
          fmt::format("N = {:.10f}, rho deviation {:.2e}, |N - double sum|/N {:.2e} (< 1e-6)",
                      charge.charge, charge.max_relative_deviation, n_err)};
}

// --- 3: projection postulate ------------------------------------------------

Verdict projection_postulate() {
  const auto g = make_grid(0, 4, 64, -12, 12, 64);
  const EvolutionKernel k(g, HamiltonianSpec{1.0, Potential::harmonic(1.0, 0.5)});
  const auto psi0 = gaussian_state(g, -1, 1, 1);
  const auto initial = sharp_event(g, 0, psi0);
  const std::vector<double> edges1{-1, 1}, edges2{-0.5, 1.5};
  const std::size_t t1 = 20, t2 = 45;
  const std::vector<CompleteMeasurement> stages{
      {position_partition(edges1), ObservationWindow::sharp(g, t1)},
      {position_partition(edges2), ObservationWindow::sharp(g, t2)}};

  // Textbook oracle: evolve, project, renormalize, evolve, project.
  auto bin_of = [](const std::vector<double>& e, double x) {
    return x < e[0] ? 0u : x < e[1] ? 1u : 2u;
  };
  auto project = [&](const std::vector<cplx>& s, const std::vector<double>& e, unsigned bin) {
    std::vector<cplx> out(s.size());
    for (std::size_t j = 0; j < s.size(); ++j)
      out[j] = bin_of(e, g.x(j)) == bin ? s[j] : cplx{0, 0};
    return out;
  };
  double joint[3][3];
  const auto at1 = evolve_indices(k, psi0, 0, t1);
  for (unsigned a = 0; a < 3; ++a) {
    const auto pa = project(at1, edges1, a);
    const double prob_a = slice_norm2(pa, g.dx()) / slice_norm2(at1, g.dx());
    auto collapsed = pa;
    const double nrm = std::sqrt(slice_norm2(pa, g.dx()));
    for (auto& v : collapsed) v /= nrm;
    const auto at2 = evolve_indices(k, collapsed, t1, t2);
    for (unsigned b = 0; b < 3; ++b)
      joint[a][b] = prob_a * slice_norm2(project(at2, edges2, b), g.dx()) / slice_norm2(at2, g.dx());
  }

  const std::size_t runs = 10000;
  double counts[3][3] = {};
  for (std::size_t seed = 0; seed < runs; ++seed) {
    const auto h = run_history(k, initial, stages, OrbitVariant::retarded, seed);
    counts[h.stages[0].outcome_index][h.stages[1].outcome_index] += 1;
  }
  double worst = 0;
  for (unsigned a = 0; a < 3; ++a)
    for (unsigned b = 0; b < 3; ++b) {
      const double p = joint[a][b];
      const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(runs));
      const double f = counts[a][b] / static_cast<double>(runs);
      worst = std::max(worst, sigma > 0 ? std::abs(f - p) / sigma : (f == 0 ? 0 : INFINITY));
    }
  return {worst < 3, fmt::format("10^4 histories, worst joint-frequency deviation {:.2f} sigma (< 3)",
                                 worst)};
}

// --- 4: continuity ----------------------------------------------------------

double continuity_max(std::size_t n_t, std::size_t n_x) {
  const auto g = make_grid(0, 4, n_t, -20, 20, n_x);
  const EvolutionKernel k(g, HamiltonianSpec{1.0, Potential::zero()});
  const auto orbit = make_orbit(k, sharp_event(g, 0, gaussian_state(g, -4, 1, 1)), OrbitVariant::full);
  const auto r = continuity_residual(orbit.psi, HamiltonianSpec{1.0, Potential::zero()}, DerivativeScheme::finite_difference);
  // Edge slices use one-sided differences; compare interior slices.
  double m = 0;
  for (std::size_t i = 1; i + 1 < n_t; ++i)
    for (std::size_t j = 0; j < n_x; ++j) m = std::max(m, std::abs(r[i * n_x + j]));
  return m;
}

Verdict continuity() {
  const double coarse = continuity_max(256, 128), fine = continuity_max(512, 256);
  const double ratio = coarse / fine;
  return {ratio >= 3 && ratio <= 5,
          fmt::format("residual {:.3e} -> {:.3e}, ratio {:.3f} (in [3, 5])", coarse, fine, ratio)};
}

// --- 5: time-energy uncertainty ---------------------------------------------

Verdict time_energy_uncertainty() {
  const auto g = make_grid(0, 10, 512, -20, 20, 256);
  const double sigma_t = 0.5;
  const auto event = gaussian_event(g, {5, sigma_t, 0, 1, 0.5, 1});
  const auto whole = ObservationWindow::whole_grid(g);
  const double de = uncertainty(OperatorSpec::energy(DerivativeScheme::spectral), event.field(), whole);
  const double dtime = uncertainty(OperatorSpec::time(), event.field(), whole);
  const double product_err = relative(de * dtime, g.hbar() / 2);
  const double width_err = std::max(relative(dtime, sigma_t), relative(de, g.hbar() / (2 * sigma_t)));

  // Cross-check: energy spread read off the Fourier density |Ψ~(E,p)|².
  const auto tilde = to_energy_momentum(event);
  double w = 0, m1 = 0, m2 = 0;
  for (std::size_t a = 0; a < g.n_t(); ++a)
    for (std::size_t b = 0; b < g.n_x(); ++b) {
      const double d = std::norm(tilde(a, b)), e = g.energy(a);
      w += d, m1 += d * e, m2 += d * e * e;
    }
  const double de_fourier = std::sqrt(m2 / w - (m1 / w) * (m1 / w));
  const double fourier_err = relative(de_fourier, de);

  // Stationary orbit: ground state of the lattice Hamiltonian, single-slice windows.
  const auto gs = make_grid(0, 4, 256, -8, 8, 128);
  const HamiltonianSpec h{1.0, Potential::harmonic(1.0, 1.0)};
  const auto eig = hamiltonian_eigensystem(gs, h);
  const EvolutionKernel k(gs, h);
  const auto orbit = make_orbit(k, sharp_event(gs, 100, eig->state(0)), OrbitVariant::full);
  const auto hop = OperatorSpec::hamiltonian_op(h, DerivativeScheme::finite_difference);
  double dh = 0;
  for (std::size_t i : {0ul, 37ul, 100ul, 255ul})
    dh = std::max(dh, uncertainty(hop, orbit.psi, ObservationWindow::sharp(gs, i)));

  return {product_err < 1e-3 && width_err < 1e-3 && fourier_err < 1e-3 && dh < 1e-8,
          fmt::format("|dE dt - hbar/2|/(hbar/2) {:.2e}, closed-form widths {:.2e}, "
                      "Fourier-density dE {:.2e} (< 1e-3); stationary dH {:.2e} (< 1e-8)",
                      product_err, width_err, fourier_err, dh)};
}

// --- 6: <E> = <H> -----------------------------------------------------------

struct EhGap {
  double worst_ratio;  ///< max over slices of |<E>-<H>| / tolerance
  double max_gap;
};

// Centred iħ∂t on a Crank–Nicolson orbit differs from H by H³dt²/(4ħ²) at
// leading order; the tolerance takes dt²Σ|ψ||H³ψ|dx/ħ², four times that bound.
EhGap energy_hamiltonian_gap(const SpacetimeGrid& g, const HamiltonianSpec& h,
                             const EventWavefunction& source) {
  const EvolutionKernel k(g, h);
  const auto orbit = make_orbit(k, source, OrbitVariant::full);
  const auto e = marginal_densities(OperatorSpec::energy(), orbit.psi);
  const auto hm = marginal_densities(OperatorSpec::hamiltonian_op(h, DerivativeScheme::finite_difference),
                                     orbit.psi);
  EhGap out{0, 0};
  std::vector<cplx> h1(g.n_x()), h2(g.n_x()), h3(g.n_x());
  for (std::size_t i = 1; i + 1 < g.n_t(); ++i) {
    const auto s = orbit.psi.slice(i);
    apply_hamiltonian_slice(h, g, g.t(i), DerivativeScheme::finite_difference, s, h1);
    apply_hamiltonian_slice(h, g, g.t(i), DerivativeScheme::finite_difference, h1, h2);
    apply_hamiltonian_slice(h, g, g.t(i), DerivativeScheme::finite_difference, h2, h3);
    double bound = 0;
    for (std::size_t j = 0; j < g.n_x(); ++j) bound += std::abs(s[j]) * std::abs(h3[j]) * g.dx();
    bound *= g.dt() * g.dt() / (g.hbar() * g.hbar());
    const double gap = std::abs(e[i] - hm[i]);
    out.max_gap = std::max(out.max_gap, gap);
    out.worst_ratio = std::max(out.worst_ratio, gap / bound);
  }
  return out;
}

Verdict energy_equals_hamiltonian() {
  struct Case {
    std::string name;
    HamiltonianSpec h;
    bool gaussian_source;
  };
  const std::vector<Case> cases{
      {"free", {1.0, Potential::zero()}, true},
      {"harmonic", {1.0, Potential::harmonic(1.0, 1.0)}, false},
      {"driven", {1.0, Potential::driven_harmonic(1.0, 1.0, 0.5, 1.3)}, false}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    EhGap gaps[2];
    for (int level = 0; level < 2; ++level) {
      const std::size_t n_t = level == 0 ? 256 : 512;
      const auto g = make_grid(0, 4, n_t, -12, 12, 128);
      const auto source = c.gaussian_source
                              ? gaussian_event(g, {2, 0.3, 0, 1, 0.5, 1})
                              : sharp_event(g, n_t / 4, gaussian_state(g, 1, 0.8, 0.5));
      gaps[level] = energy_hamiltonian_gap(g, c.h, source);
    }
    const double ratio = gaps[0].max_gap / gaps[1].max_gap;
    const bool pass = gaps[0].worst_ratio <= 1 && gaps[1].worst_ratio <= 1 && ratio >= 3 && ratio <= 5;
    ok = ok && pass;
    detail += fmt::format("{}{}: gap/tol {:.2f}, dt-halving ratio {:.2f}", detail.empty() ? "" : "; ",
                          c.name, gaps[1].worst_ratio, ratio);
  }
  return {ok, detail + " (gap/tol <= 1, ratio in [3, 5])"};
}

// --- 7: golden rule ---------------------------------------------------------

Verdict golden_rule() {
  const auto model = DiscreteContinuumModel::flat(0, -5, 5, 1024, 1.0, 0.05, 1.0);
  const auto cmp = compare_golden_rule(model, 0);
  return {cmp.relative_error < 0.05,
          fmt::format("Gamma formula {:.6f}, exact-diagonalization fit {:.6f}, rel err {:.2e} (< 5%)",
                      cmp.gamma_formula, cmp.gamma_fit, cmp.relative_error)};
}

// --- 8: Born S-matrix -------------------------------------------------------

Verdict born_smatrix_scaling() {
  auto setup_for = [](double g) {
    ScatteringSetup s;
    s.potential = Potential::gaussian(g, 0, 1);
    s.n_steps = 400;
    return s;
  };
  bool ok = true;
  std::string detail;
  for (const auto& [k, kp] : std::vector<std::pair<int, int>>{{4, -4}, {4, 4}, {6, -6}}) {
    double err[2];
    for (int i = 0; i < 2; ++i) {
      const auto s = setup_for(i == 0 ? 0.1 : 0.05);
      const double p = k * s.dp(), pp = kp * s.dp();
      err[i] = std::abs(born_smatrix(s, p, pp).value - exact_smatrix(s, p, pp));
    }
    const double ratio = err[0] / err[1];
    ok = ok && ratio >= 2 && ratio <= 8;
    detail += fmt::format("{}S({},{}) ratio {:.3f}", detail.empty() ? "" : ", ", k, kp, ratio);
  }
  return {ok, detail + " (in [2, 8])"};
}

// --- 9: Dyson recursion -----------------------------------------------------

Verdict dyson_recursion() {
  const auto g = make_grid(0, 8, 512, -20, 20, 256);
  auto free = std::make_shared<EvolutionKernel>(g, HamiltonianSpec{1.0, Potential::zero()});
  const auto v = Potential::gaussian(0.5, 1, 1.5);
  const auto source = gaussian_event(g, {2, 0.4, -3, 1, 0.5, 1});
  const PerturbedKernel full(free, v);
  const auto exact = make_orbit(full, source, OrbitVariant::retarded);
  const auto rhs = dyson_recursion_rhs(*free, v, source, exact.psi);
  double diff = 0, scale = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    diff = std::max(diff, std::abs(rhs.values()[k] - exact.psi.values()[k]));
    scale = std::max(scale, std::abs(exact.psi.values()[k]));
  }
  return {diff / scale < 1e-8, fmt::format("relative error {:.2e} (< 1e-8)", diff / scale)};
}

// --- 10: commutators --------------------------------------------------------

double commutator_residual(std::size_t n, bool time_axis) {
  const auto g = make_grid(0, 10, n, -10, 10, n);
  const auto f = gaussian_event(g, {5, 0.8, 0, 1.2, 0.5, 0.7}).field();
  const auto a = time_axis ? OperatorSpec::energy(DerivativeScheme::finite_difference)
                           : OperatorSpec::momentum(DerivativeScheme::finite_difference);
  const auto b = time_axis ? OperatorSpec::time() : OperatorSpec::position();
  const auto ab = apply(a, apply(b, f));
  const auto ba = apply(b, apply(a, f));
  const cplx expected = time_axis ? cplx{0, g.hbar()} : cplx{0, -g.hbar()};
  double d = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    d = std::max(d, std::abs(ab.values()[k] - ba.values()[k] - expected * f.values()[k]));
  return d;
}

Verdict commutators() {
  bool ok = true;
  std::string detail;
  for (bool time_axis : {true, false}) {
    const double r64 = commutator_residual(64, time_axis), r128 = commutator_residual(128, time_axis),
                 r256 = commutator_residual(256, time_axis);
    const double q1 = r64 / r128, q2 = r128 / r256;
    ok = ok && q1 >= 3 && q1 <= 5 && q2 >= 3 && q2 <= 5;
    detail += fmt::format("{}{} ratios {:.3f}, {:.3f}", detail.empty() ? "" : "; ",
                          time_axis ? "[E,t]" : "[p,x]", q1, q2);
  }
  return {ok, detail + " (in [3, 5])"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"standard-QM limit of sharp-time windows", standard_qm_limit},
      {"conserved charge", conserved_charge_criterion},
      {"projection postulate", projection_postulate},
      {"continuity relation, second order", continuity},
      {"time-energy uncertainty", time_energy_uncertainty},
      {"<E> = <H> on orbits", energy_equals_hamiltonian},
      {"golden-rule decay rate", golden_rule},
      {"Born S-matrix error O(g^2)", born_smatrix_scaling},
      {"Dyson recursion", dyson_recursion},
      {"canonical commutators, second order", commutators}};

  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::strtoul(argv[i], nullptr, 10));

  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    if (!selected.empty() && !selected.count(c + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[c].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.passed;
    std::cout << fmt::format("{} criterion {:>2} {}: {} [{:.1f}s]", v.passed ? "PASS" : "FAIL", c + 1,
                             criteria[c].first, v.detail, secs)
              << std::endl;
  }
  return failures;
}
