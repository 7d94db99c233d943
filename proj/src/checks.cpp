#include "qet/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>

#include <fmt/format.h>

#include "qet/measurement.hpp"
#include "qet/observables.hpp"
#include "qet/perturbation.hpp"
#include "qet/propagator.hpp"

namespace qet {

const std::vector<std::string>& check_suite_names() {
  static const std::vector<std::string> names{"lattice", "observables", "propagator",
                                              "measurement", "perturbation"};
  return names;
}

namespace {

class Suite {
 public:
  Suite(std::string name, std::vector<CheckResult>& out) : name_(std::move(name)), out_(out) {}

  void below(std::string check, double value, double bound) {
    out_.push_back({name_, std::move(check), value < bound, value, fmt::format("< {:g}", bound)});
  }
  void within(std::string check, double value, double lo, double hi) {
    out_.push_back({name_, std::move(check), value >= lo && value <= hi, value,
                    fmt::format("in [{:g}, {:g}]", lo, hi)});
  }

 private:
  std::string name_;
  std::vector<CheckResult>& out_;
};

double max_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

double max_abs_c(std::span<const cplx> a) {
  double d = 0;
  for (auto v : a) d = std::max(d, std::abs(v));
  return d;
}

SpacetimeGrid small_grid() { return make_grid(0, 10, 128, -20, 20, 128); }

void lattice_suite(Suite& s) {
  const auto g = small_grid();
  const auto ev = gaussian_event(g, {5, 0.7, -1, 1.3, 0.8, 0.6});
  s.below("gaussian_event unit norm |norm-1|", std::abs(ev.norm() - 1), 1e-12);
  const auto em = to_energy_momentum(ev);
  s.below("Parseval |norm - norm~|", std::abs(em.norm() - ev.norm()), 1e-10);
  s.below("Fourier round trip max error", max_diff(from_energy_momentum(em).values(), ev.values()),
          1e-10);
  const auto a = plane_wave(g, 3 * g.dE(), 2 * g.dp());
  const auto b = plane_wave(g, -g.dE(), 5 * g.dp());
  s.below("plane-wave orthogonality |<a|b>|/<a|a>",
          std::abs(inner_product(a, b)) / std::real(inner_product(a, a)), 1e-10);
  const cplx phase = inner_product(ev, EventWavefunction(g, Representation::spacetime, [&] {
                                     std::vector<cplx> v(ev.values().begin(), ev.values().end());
                                     for (auto& x : v) x *= cplx{0, 1};
                                     return v;
                                   }()));
  s.below("<psi|i psi> - i", std::abs(phase - cplx{0, 1}), 1e-12);
}

double commutator_residual(std::size_t n, bool time_axis) {
  const auto g = make_grid(0, 10, n, -10, 10, n);
  const auto f = gaussian_event(g, {5, 0.8, 0, 1.2, 0.5, 0.7}).field();
  const auto a = time_axis ? OperatorSpec::energy() : OperatorSpec::momentum(DerivativeScheme::finite_difference);
  const auto b = time_axis ? OperatorSpec::time() : OperatorSpec::position();
  const auto ab = apply(a, apply(b, f));
  const auto ba = apply(b, apply(a, f));
  // [Ê,t̂] = iħ, [p̂,x̂] = -iħ
  const cplx expected = time_axis ? cplx{0, g.hbar()} : cplx{0, -g.hbar()};
  double d = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    d = std::max(d, std::abs(ab.values()[k] - ba.values()[k] - expected * f.values()[k]));
  return d;
}

void observables_suite(Suite& s) {
  const auto g = small_grid();
  const double E = 4 * g.dE(), p = -3 * g.dp();
  const auto pw = plane_wave(g, E, p);
  const double amp = 1.0 / (2 * std::numbers::pi);
  auto eigen_error = [&](const OperatorSpec& op, double value) {
    const auto r = apply(op, pw.field());
    double d = 0;
    for (std::size_t k = 0; k < g.size(); ++k)
      d = std::max(d, std::abs(r.values()[k] - value * pw.values()[k]));
    return d / (std::abs(value) * amp);
  };
  s.below("spectral energy eigenvalue relative error",
          eigen_error(OperatorSpec::energy(DerivativeScheme::spectral), E), 1e-8);
  s.below("spectral momentum eigenvalue relative error",
          eigen_error(OperatorSpec::momentum(DerivativeScheme::spectral), p), 1e-8);
  s.within("[E,t] residual refinement ratio",
           commutator_residual(64, true) / commutator_residual(128, true), 3, 5);
  s.within("[p,x] residual refinement ratio",
           commutator_residual(64, false) / commutator_residual(128, false), 3, 5);
  std::vector<cplx> real_field(g.size());
  for (std::size_t i = 0; i < g.n_t(); ++i)
    for (std::size_t j = 0; j < g.n_x(); ++j)
      real_field[i * g.n_x() + j] = std::exp(-0.1 * g.x(j) * g.x(j)) * (1 + 0.01 * g.t(i));
  s.below("current of a real field", max_abs(current_density(ComplexField(g, real_field), 1.0)),
          1e-14);
  const auto j = current_density(pw.field(), 1.0, DerivativeScheme::spectral);
  s.below("plane-wave current - p/m |A|^2",
          std::abs(*std::max_element(j.begin(), j.end()) - p * amp * amp) / (std::abs(p) * amp * amp),
          1e-10);
}

void propagator_suite(Suite& s) {
  const auto g = small_grid();
  const HamiltonianSpec h{1.0, Potential::harmonic(1.0, 0.3)};
  const auto psi0 = gaussian_state(g, -2, 1, 1);
  for (auto integ : {Integrator::crank_nicolson, Integrator::split_step}) {
    const EvolutionKernel k(g, h, integ);
    auto psi = psi0;
    double drift = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      const double before = slice_norm2(psi, g.dx());
      k.step(psi, i, +1);
      drift = std::max(drift, std::abs(slice_norm2(psi, g.dx()) - before));
    }
    s.below(to_string(integ) + " per-step norm drift", drift, 1e-12);
    const auto there = evolve_indices(k, psi0, 3, 90);
    const auto back = evolve_indices(k, there, 90, 3);
    s.below(to_string(integ) + " forward-backward error", max_diff(back, psi0), 1e-10);
    const auto direct = evolve_indices(k, psi0, 10, 70);
    const auto split = evolve_indices(k, evolve_indices(k, psi0, 10, 37), 37, 70);
    s.below(to_string(integ) + " group property error", max_diff(direct, split), 1e-10);
  }
  const EvolutionKernel k(g, h);
  const auto ev = gaussian_event(g, {5, 0.6, 0, 1.5, 0.3, 0.5});
  const auto full = make_orbit(k, ev, OrbitVariant::full);
  const auto ret = make_orbit(k, ev, OrbitVariant::retarded);
  const auto adv = make_orbit(k, ev, OrbitVariant::advanced);
  std::vector<cplx> sum(g.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = ret.psi.values()[i] + adv.psi.values()[i];
  s.below("full - (retarded + advanced)", max_diff(full.psi.values(), sum) / max_abs_c(sum), 1e-12);
  s.below("full-orbit rho(t) relative deviation", conserved_charge(full).max_relative_deviation,
          1e-10);
  const auto sharp = make_orbit(k, sharp_event(g, 40, psi0), OrbitVariant::retarded);
  s.below("sharp source |N - 1|", std::abs(conserved_charge(sharp).charge - 1), 1e-10);

  // e^{-i(Et-px)} with E = p²/2m on both dual grids: an exact orbit.
  const auto ge = make_grid(0, 4 * std::numbers::pi, 32, 0, 2 * std::numbers::pi, 16);
  const HamiltonianSpec free{1.0, Potential::zero()};
  s.below("plane-wave Schrodinger residual",
          schrodinger_residual(plane_wave(ge, 0.5, 1.0).field(), free, DerivativeScheme::spectral),
          1e-8);
  std::vector<cplx> noise(ge.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = {std::sin(1.7 * i * i), std::cos(0.3 * i)};
  const double r = schrodinger_residual(ComplexField(ge, noise), free);
  s.within("random-field Schrodinger residual (negative control)", r, 0.1,
           std::numeric_limits<double>::infinity());
}

void measurement_suite(Suite& s) {
  const auto g = small_grid();
  const HamiltonianSpec h{1.0, Potential::harmonic(1.0, 0.5)};
  const EvolutionKernel k(g, h);
  const auto psi0 = gaussian_state(g, 1, 1.2, 0.5);
  const auto orbit = make_orbit(k, sharp_event(g, 10, psi0), OrbitVariant::retarded);

  auto partition_ok = [&](const std::vector<Outcome>& p) {
    try {
      validate_partition(p, g);
      return 0.0;
    } catch (const QetError&) {
      return 1.0;
    }
  };
  s.below("position partition violations", partition_ok(position_partition({-2, 0, 2})), 0.5);
  s.below("momentum partition violations", partition_ok(momentum_partition({-0.5, 0.5})), 0.5);
  const auto gs = make_grid(0, 1, 4, -8, 8, 48);
  auto ep = energy_partition(gs, h, {1.0, 2.0});
  s.below("energy partition violations", [&] {
    try {
      validate_partition(ep, gs);
      return 0.0;
    } catch (const QetError&) {
      return 1.0;
    }
  }(), 0.5);

  const CompleteMeasurement m{position_partition({-1, 1}), ObservationWindow::time_interval(g, 3, 6)};
  const auto probs = outcome_probabilities(m, orbit.psi);
  double total = 0;
  for (const auto& p : probs) total += p.probability;
  s.below("|sum P(a) - 1|", std::abs(total - 1), 1e-10);
  s.below("|collapse norm - 1|", std::abs(collapse(m, orbit.psi, 1).norm() - 1), 1e-10);

  const std::size_t t1 = 50;
  const auto w = ObservationWindow::sharp(g, t1);
  const auto state = evolve_indices(k, psi0, 10, t1);
  double qm = 0;
  for (std::size_t j = 0; j < g.n_x(); ++j) qm += g.x(j) * std::norm(state[j]) * g.dx();
  s.below("sharp-window <x> vs standard QM",
          std::abs(expectation(OperatorSpec::position(), orbit.psi, w) - qm), 1e-8);

  const std::vector<CompleteMeasurement> stages{
      {position_partition({0}), ObservationWindow::sharp(g, 30)},
      {position_partition({-1, 1}), ObservationWindow::sharp(g, 60)}};
  const auto h1 = run_history(k, sharp_event(g, 10, psi0), stages, OrbitVariant::retarded, 7);
  const auto h2 = run_history(k, sharp_event(g, 10, psi0), stages, OrbitVariant::retarded, 7);
  double differs = 0;
  for (std::size_t i = 0; i < stages.size(); ++i)
    differs += h1.stages[i].outcome_index != h2.stages[i].outcome_index ||
               max_diff(h1.stages[i].outcome.values(), h2.stages[i].outcome.values()) != 0;
  s.below("same seed, differing stages", differs, 0.5);
}

void perturbation_suite(Suite& s) {
  const auto g = make_grid(0, 5, 100, -20, 20, 128);
  auto free = std::make_shared<const EvolutionKernel>(g, HamiltonianSpec{1.0, Potential::zero()});
  const auto v = Potential::gaussian(0.3, 1.0, 1.5);
  const auto ev = gaussian_event(g, {1.5, 0.3, -3, 1, 0.5, 1});
  const PerturbedKernel exact_kernel(free, v);
  const auto exact = make_orbit(exact_kernel, ev, OrbitVariant::retarded);
  const auto rhs = dyson_recursion_rhs(*free, v, ev, exact.psi);
  s.below("recursive Dyson identity relative error",
          max_diff(rhs.values(), exact.psi.values()) / max_abs_c(exact.psi.values()), 1e-8);
  const auto zero_order = dyson_orbit(*free, v, ev, 0);
  const auto ret0 = make_orbit(*free, ev, OrbitVariant::retarded);
  s.below("order 0 vs free retarded orbit", max_diff(zero_order.psi.values(), ret0.psi.values()),
          1e-14);
  const auto no_v = dyson_orbit(*free, Potential::zero(), ev, 3);
  s.below("V = 0, order 3 vs order 0", max_diff(no_v.psi.values(), ret0.psi.values()), 1e-14);
  auto term_norm = [&](double scale) {
    const auto terms = dyson_terms(*free, v.scaled(scale), ev, 2);
    return max_abs_c(terms[2].values());
  };
  s.within("second-order term ratio under g -> g/2", term_norm(1.0) / term_norm(0.5), 3.9, 4.1);
  const auto model = DiscreteContinuumModel::flat(0.0, -5, 5, 256, 1.0, 0.1);
  s.below("golden-rule formula |Gamma - 2pi*0.01|",
          std::abs(golden_rule_rate(model, 0).gamma - 2 * std::numbers::pi * 0.01), 1e-12);
  const auto off = DiscreteContinuumModel::flat(7.0, -5, 5, 256, 1.0, 0.1);
  s.below("golden-rule rate off the support", golden_rule_rate(off, 0).gamma, 1e-300);
  ScatteringSetup setup;
  setup.potential = Potential::zero();
  const double p = 4 * setup.dp();
  const auto b = born_smatrix(setup, p, p);
  s.below("Born S with V = 0: |S - delta/dp| * dp", std::abs(std::abs(b.value) - 1 / setup.dp()) * setup.dp(),
          1e-14);
}

}  // namespace

std::vector<CheckResult> run_checks(const std::vector<std::string>& suites) {
  const std::map<std::string, std::function<void(Suite&)>> table{
      {"lattice", lattice_suite},         {"observables", observables_suite},
      {"propagator", propagator_suite},   {"measurement", measurement_suite},
      {"perturbation", perturbation_suite}};
  std::vector<std::string> names;
  for (const auto& n : suites) {
    if (n == "all") {
      for (const auto& all : check_suite_names()) names.push_back(all);
    } else if (table.count(n)) {
      names.push_back(n);
    } else {
      throw std::invalid_argument("unknown check suite '" + n + "'");
    }
  }
  std::vector<CheckResult> out;
  for (const auto& n : check_suite_names()) {
    if (std::find(names.begin(), names.end(), n) == names.end()) continue;
    Suite s(n, out);
    try {
      table.at(n)(s);
    } catch (const std::exception& e) {
      out.push_back({n, std::string("exception: ") + e.what(), false,
                     std::numeric_limits<double>::quiet_NaN(), "no exception"});
    }
  }
  return out;
}

}  // namespace qet
