#include "qet/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fft.hpp"

namespace qet {

std::string to_string(Integrator integrator) {
  return integrator == Integrator::split_step ? "split_step" : "crank_nicolson";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "crank_nicolson") return Integrator::crank_nicolson;
  if (name == "split_step") return Integrator::split_step;
  throw std::invalid_argument("unknown integrator '" + name + "'");
}

std::string to_string(OrbitVariant variant) {
  switch (variant) {
    case OrbitVariant::full: return "full";
    case OrbitVariant::retarded: return "retarded";
    case OrbitVariant::advanced: return "advanced";
  }
  return "unknown";
}

OrbitVariant orbit_variant_from_string(const std::string& name) {
  if (name == "full") return OrbitVariant::full;
  if (name == "retarded") return OrbitVariant::retarded;
  if (name == "advanced") return OrbitVariant::advanced;
  throw std::invalid_argument("unknown orbit variant '" + name + "'");
}

namespace {

// Solves the tridiagonal system with sub/super diagonal `off` and diagonal
// `diag` (first and last entries possibly modified) in place on rhs.
void solve_tridiagonal(std::span<const cplx> diag, cplx off, std::span<cplx> rhs,
                       std::vector<cplx>& scratch) {
  const std::size_t n = diag.size();
  scratch.resize(n);
  cplx beta = diag[0];
  rhs[0] /= beta;
  for (std::size_t j = 1; j < n; ++j) {
    scratch[j] = off / beta;
    beta = diag[j] - off * scratch[j];
    rhs[j] = (rhs[j] - off * rhs[j - 1]) / beta;
  }
  for (std::size_t j = n - 1; j-- > 0;) rhs[j] -= scratch[j + 1] * rhs[j + 1];
}

// Periodic tridiagonal solve (Sherman–Morrison correction of the corners).
void solve_cyclic(std::span<const cplx> diag, cplx off, std::span<cplx> rhs) {
  const std::size_t n = diag.size();
  const cplx gamma = -diag[0];
  std::vector<cplx> d(diag.begin(), diag.end());
  d[0] -= gamma;
  d[n - 1] -= off * off / gamma;
  std::vector<cplx> scratch;
  solve_tridiagonal(d, off, rhs, scratch);
  std::vector<cplx> z(n);
  z[0] = gamma;
  z[n - 1] = off;
  solve_tridiagonal(d, off, z, scratch);
  const cplx fact = (rhs[0] + off * rhs[n - 1] / gamma) / (1.0 + z[0] + off * z[n - 1] / gamma);
  for (std::size_t j = 0; j < n; ++j) rhs[j] -= fact * z[j];
}

}  // namespace

EvolutionKernel::EvolutionKernel(SpacetimeGrid grid, HamiltonianSpec hamiltonian,
                                 Integrator integrator)
    : grid_(grid), hamiltonian_(std::move(hamiltonian)), integrator_(integrator) {
  if (!(hamiltonian_.mass > 0)) throw std::invalid_argument("EvolutionKernel: mass must be > 0");
  if (!hamiltonian_.potential.time_dependent()) {
    static_potential_.resize(grid_.n_x());
    hamiltonian_.potential.sample(grid_, 0.0, static_potential_);
  }
  if (integrator_ == Integrator::split_step) {
    const std::size_t n = grid_.n_x();
    const double base = 2.0 * std::numbers::pi / (grid_.dx() * static_cast<double>(n));
    kinetic_phase_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double kk = base * static_cast<double>(folded_index(k, n));
      kinetic_phase_[k] = grid_.hbar() * kk * kk * grid_.dt() / (2.0 * hamiltonian_.mass);
    }
  }
}

std::string EvolutionKernel::describe() const {
  return fmt::format("{}(mass={}, V={}, dt={:.17g})", to_string(integrator_), hamiltonian_.mass,
                     hamiltonian_.potential.description(), grid_.dt());
}

void EvolutionKernel::sample_potential(double t, std::vector<double>& out) const {
  if (!static_potential_.empty()) {
    out = static_potential_;
    return;
  }
  out.resize(grid_.n_x());
  hamiltonian_.potential.sample(grid_, t, out);
}

void EvolutionKernel::step(std::span<cplx> state, std::size_t from_index, int direction) const {
  if (state.size() != grid_.n_x()) throw std::invalid_argument("step: state length mismatch");
  if (direction != 1 && direction != -1) throw std::invalid_argument("step: direction must be ±1");
  if (direction < 0 && from_index == 0) throw std::invalid_argument("step: before first slice");
  const double t_mid = grid_.t(from_index) + 0.5 * direction * grid_.dt();
  if (integrator_ == Integrator::crank_nicolson)
    step_crank_nicolson(state, t_mid, direction);
  else
    step_split(state, t_mid, direction);
}

void EvolutionKernel::step_crank_nicolson(std::span<cplx> state, double t_mid,
                                          int direction) const {
  const std::size_t n = grid_.n_x();
  const double hbar = grid_.hbar();
  const double kin = hbar * hbar / (2.0 * hamiltonian_.mass * grid_.dx() * grid_.dx());
  // Forward: (1 + iβH)ψ' = (1 - iβH)ψ. Backward swaps the two factors.
  const cplx ib{0.0, direction * grid_.dt() / (2.0 * hbar)};
  std::vector<double> v;
  sample_potential(t_mid, v);

  std::vector<cplx> rhs(n);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx h_psi = (2.0 * kin + v[j]) * state[j] -
                       kin * (state[(j + 1) % n] + state[(j + n - 1) % n]);
    rhs[j] = state[j] - ib * h_psi;
  }

  if (n < 3) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::Index a = static_cast<Eigen::Index>(j);
      m(a, a) += ib * (2.0 * kin + v[j]);
      m(a, static_cast<Eigen::Index>((j + 1) % n)) -= ib * kin;
      m(a, static_cast<Eigen::Index>((j + n - 1) % n)) -= ib * kin;
    }
    Eigen::Map<Eigen::VectorXcd> b(rhs.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXcd x = m.partialPivLu().solve(b);
    std::copy(x.data(), x.data() + n, state.begin());
    return;
  }

  std::vector<cplx> diag(n);
  for (std::size_t j = 0; j < n; ++j) diag[j] = 1.0 + ib * (2.0 * kin + v[j]);
  solve_cyclic(diag, -ib * kin, rhs);
  std::copy(rhs.begin(), rhs.end(), state.begin());
}

void EvolutionKernel::step_split(std::span<cplx> state, double t_mid, int direction) const {
  const std::size_t n = grid_.n_x();
  std::vector<double> v;
  sample_potential(t_mid, v);
  const double half = -direction * 0.5 * grid_.dt() / grid_.hbar();
  for (std::size_t j = 0; j < n; ++j) state[j] *= std::polar(1.0, half * v[j]);
  detail::dft(state, -1);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k)
    state[k] *= std::polar(inv_n, -direction * kinetic_phase_[k]);
  detail::dft(state, +1);
  for (std::size_t j = 0; j < n; ++j) state[j] *= std::polar(1.0, half * v[j]);
}

std::vector<cplx> evolve_indices(const TimeStepper& kernel, std::span<const cplx> state,
                                 std::size_t from_index, std::size_t to_index) {
  const auto& g = kernel.grid();
  if (state.size() != g.n_x()) throw std::invalid_argument("evolve: state length mismatch");
  if (from_index >= g.n_t() || to_index >= g.n_t())
    throw std::invalid_argument("evolve: time index off the grid");
  std::vector<cplx> psi(state.begin(), state.end());
  for (std::size_t i = from_index; i < to_index; ++i) kernel.step(psi, i, +1);
  for (std::size_t i = from_index; i > to_index; --i) kernel.step(psi, i, -1);
  return psi;
}

std::vector<cplx> evolve(const TimeStepper& kernel, std::span<const cplx> state, double t_from,
                         double t_to) {
  const auto& g = kernel.grid();
  return evolve_indices(kernel, state, g.time_index(t_from), g.time_index(t_to));
}

namespace {

bool any_nonzero(std::span<const cplx> v) {
  return std::any_of(v.begin(), v.end(), [](cplx c) { return c != cplx{}; });
}

void check_source(const TimeStepper& kernel, const EventWavefunction& source) {
  if (source.representation() != Representation::spacetime)
    throw std::invalid_argument("orbit: source must be in the spacetime representation");
  if (!(source.grid() == kernel.grid()))
    throw std::invalid_argument("orbit: source grid differs from the kernel grid");
}

// acc_k = U(k, k-1) acc_{k-1} + dt Ψ_k, written into out for k ≤ last.
void retarded_sweep(const TimeStepper& kernel, const EventWavefunction& source,
                    std::size_t last, ComplexField& out) {
  const auto& g = kernel.grid();
  const double dt = g.dt();
  std::vector<cplx> acc(g.n_x());
  bool started = false;
  for (std::size_t k = 0; k <= last; ++k) {
    if (started) kernel.step(acc, k - 1, +1);
    const auto s = source.slice(k);
    if (!started && any_nonzero(s)) started = true;
    if (!started) continue;
    auto row = out.slice(k);
    for (std::size_t j = 0; j < acc.size(); ++j) {
      acc[j] += dt * s[j];
      row[j] += acc[j];
    }
  }
}

// b_k = U(k, k+1)(b_{k+1} + dt Ψ_{k+1}), strictly later slices only.
void advanced_sweep(const TimeStepper& kernel, const EventWavefunction& source,
                    ComplexField& out) {
  const auto& g = kernel.grid();
  const double dt = g.dt();
  std::vector<cplx> acc(g.n_x());
  bool started = false;
  for (std::size_t k = g.n_t() - 1; k-- > 0;) {
    const auto s = source.slice(k + 1);
    if (!started && any_nonzero(s)) started = true;
    if (!started) continue;
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += dt * s[j];
    kernel.step(acc, k + 1, -1);
    auto row = out.slice(k);
    for (std::size_t j = 0; j < acc.size(); ++j) row[j] += acc[j];
  }
}

double mean_charge(const Orbit& orbit) {
  const auto [first, last] = conserved_range(orbit);
  if (first > last) return 0.0;
  const auto rho = particle_marginal(orbit.psi);
  double sum = 0;
  for (std::size_t i = first; i <= last; ++i) sum += rho[i];
  return sum / static_cast<double>(last - first + 1);
}

}  // namespace

Orbit make_orbit(const TimeStepper& kernel, const EventWavefunction& source,
                 OrbitVariant variant) {
  check_source(kernel, source);
  const auto& g = kernel.grid();
  ComplexField psi(g);
  if (variant != OrbitVariant::advanced) retarded_sweep(kernel, source, g.n_t() - 1, psi);
  if (variant != OrbitVariant::retarded) advanced_sweep(kernel, source, psi);
  Orbit orbit{std::move(psi), std::make_shared<const EventWavefunction>(source), variant, 0.0};
  orbit.charge = mean_charge(orbit);
  return orbit;
}

Orbit make_retarded_orbit_until(const TimeStepper& kernel, const EventWavefunction& source,
                                std::size_t last_index) {
  check_source(kernel, source);
  const auto& g = kernel.grid();
  if (last_index >= g.n_t()) throw std::invalid_argument("orbit: last index off the grid");
  ComplexField psi(g);
  retarded_sweep(kernel, source, last_index, psi);
  Orbit orbit{std::move(psi), std::make_shared<const EventWavefunction>(source),
              OrbitVariant::retarded, 0.0};
  const auto [first, last] = conserved_range(orbit);
  if (first <= last && first <= last_index) {
    const auto rho = particle_marginal(orbit.psi);
    double sum = 0;
    for (std::size_t i = first; i <= last_index; ++i) sum += rho[i];
    orbit.charge = sum / static_cast<double>(last_index - first + 1);
  }
  return orbit;
}

std::vector<double> particle_marginal(const ComplexField& psi) {
  const auto& g = psi.grid();
  std::vector<double> rho(g.n_t());
  for (std::size_t i = 0; i < g.n_t(); ++i) rho[i] = slice_norm2(psi.slice(i), g.dx());
  return rho;
}

std::pair<std::size_t, std::size_t> conserved_range(const Orbit& orbit) {
  const std::size_t n_t = orbit.grid().n_t();
  const auto [s_first, s_last] = orbit.source->time_support();
  switch (orbit.variant) {
    case OrbitVariant::full: return {0, n_t - 1};
    case OrbitVariant::retarded:
      if (s_first >= n_t) return {1, 0};
      return {s_last, n_t - 1};
    case OrbitVariant::advanced:
      if (s_first >= n_t || s_first == 0) return {1, 0};
      return {0, s_first - 1};
  }
  return {1, 0};
}

ChargeReport conserved_charge(const Orbit& orbit, double tolerance) {
  const auto [first, last] = conserved_range(orbit);
  if (first > last) throw QetError("conserved_charge: no slices where the charge is conserved");
  const auto rho = particle_marginal(orbit.psi);
  ChargeReport r;
  r.first_index = first;
  r.last_index = last;
  double sum = 0;
  for (std::size_t i = first; i <= last; ++i) sum += rho[i];
  r.charge = sum / static_cast<double>(last - first + 1);
  if (!(r.charge > 0)) throw QetError("conserved_charge: orbit carries no charge");
  for (std::size_t i = first; i <= last; ++i)
    r.max_relative_deviation =
        std::max(r.max_relative_deviation, std::abs(rho[i] - r.charge) / r.charge);
  if (r.max_relative_deviation > tolerance)
    throw QetError(fmt::format("conserved_charge: rho(t) deviates from N = {:.10g} by {:.3e} "
                               "(tolerance {:.3e})",
                               r.charge, r.max_relative_deviation, tolerance));
  return r;
}

double schrodinger_residual(const ComplexField& psi, const HamiltonianSpec& h,
                            DerivativeScheme scheme) {
  const auto& g = psi.grid();
  if (g.n_t() < 3) throw std::invalid_argument("schrodinger_residual: need at least 3 slices");
  const ComplexField dpsi = time_derivative(psi, scheme);
  std::vector<cplx> h_psi(g.n_x());
  double worst = 0, scale = 0;
  for (auto v : psi.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 1; i + 1 < g.n_t(); ++i) {
    apply_hamiltonian_slice(h, g, g.t(i), scheme, psi.slice(i), h_psi);
    for (std::size_t j = 0; j < g.n_x(); ++j)
      worst = std::max(worst, std::abs(cplx{0.0, g.hbar()} * dpsi(i, j) - h_psi[j]));
  }
  return scale > 0 ? worst / scale : worst;
}

}  // namespace qet
