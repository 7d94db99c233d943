#include "qet/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fft.hpp"

namespace qet {

PerturbedKernel::PerturbedKernel(std::shared_ptr<const TimeStepper> free, Potential v)
    : free_(std::move(free)), v_(std::move(v)) {
  if (!free_) throw std::invalid_argument("PerturbedKernel: null free stepper");
  if (!v_.time_dependent()) {
    static_v_.resize(grid().n_x());
    v_.sample(grid(), 0.0, static_v_);
  }
}

void PerturbedKernel::sample(std::size_t index, std::vector<double>& out) const {
  if (!static_v_.empty()) {
    out = static_v_;
    return;
  }
  out.resize(grid().n_x());
  v_.sample(grid(), grid().t(index), out);
}

void PerturbedKernel::step(std::span<cplx> state, std::size_t from_index, int direction) const {
  if (direction != 1 && direction != -1) throw std::invalid_argument("step: direction must be ±1");
  if (direction < 0 && from_index == 0) throw std::invalid_argument("step: before first slice");
  const std::size_t to_index = direction > 0 ? from_index + 1 : from_index - 1;
  const double beta = grid().dt() / (2.0 * grid().hbar());
  // Forward: y' = (1 + iβV_to)^{-1} U₀ (1 - iβV_from) y; the backward step is
  // its exact inverse, obtained by flipping the sign of β.
  const cplx ib{0.0, direction * beta};
  std::vector<double> v_from, v_to;
  sample(from_index, v_from);
  sample(to_index, v_to);
  for (std::size_t j = 0; j < state.size(); ++j) state[j] *= 1.0 - ib * v_from[j];
  free_->step(state, from_index, direction);
  for (std::size_t j = 0; j < state.size(); ++j) state[j] /= 1.0 + ib * v_to[j];
}

std::string PerturbedKernel::describe() const {
  return fmt::format("interaction_cn(V={}) around {}", v_.description(), free_->describe());
}

double insertion_weight(std::size_t k, std::size_t m) {
  if (m < k) return 1.0;
  if (m == k) return 0.5;
  return 0.0;
}

namespace {

// out_k = (dt/iħ)[Σ_{m<k} U₀(k,m) V_m (D_m + ½E_m) + ½ V_k D_k]
ComplexField insertion_sweep(const TimeStepper& free, const Potential& v, const ComplexField& d,
                             const ComplexField* e) {
  const auto& g = free.grid();
  const std::size_t n_x = g.n_x();
  const cplx factor = g.dt() / cplx{0.0, g.hbar()};
  ComplexField out(g);
  std::vector<cplx> acc(n_x), pending(n_x);
  std::vector<double> vk(n_x);
  bool started = false;
  for (std::size_t k = 0; k < g.n_t(); ++k) {
    if (started) {
      for (std::size_t j = 0; j < n_x; ++j) acc[j] += pending[j];
      free.step(acc, k - 1, +1);
    }
    v.sample(g, g.t(k), vk);
    const auto dk = d.slice(k);
    auto row = out.slice(k);
    bool nonzero = false;
    for (std::size_t j = 0; j < n_x; ++j) {
      const cplx ek = e ? (*e)(k, j) : cplx{};
      pending[j] = vk[j] * (dk[j] + 0.5 * ek);
      nonzero = nonzero || pending[j] != cplx{};
      row[j] = factor * ((started ? acc[j] : cplx{}) + 0.5 * vk[j] * dk[j]);
    }
    started = started || nonzero;
  }
  return out;
}

ComplexField scaled_source(const EventWavefunction& source) {
  ComplexField s(source.grid());
  const double dt = source.grid().dt();
  for (std::size_t k = 0; k < s.values().size(); ++k) s.values()[k] = dt * source.values()[k];
  return s;
}

void check_same_grid(const TimeStepper& free, const EventWavefunction& source) {
  if (!(free.grid() == source.grid()))
    throw std::invalid_argument("perturbation: source grid differs from the kernel grid");
}

}  // namespace

std::vector<ComplexField> dyson_terms(const TimeStepper& free, const Potential& v,
                                      const EventWavefunction& source, std::size_t order) {
  check_same_grid(free, source);
  std::vector<ComplexField> terms;
  terms.push_back(make_orbit(free, source, OrbitVariant::retarded).psi);
  if (order == 0) return terms;
  // The first insertion acts on φ⁽⁰⁾ with the source slice split off: the
  // diagonal slice of Ĝ₀⁺Ψ enters the trapezoid weight only by half.
  const ComplexField e = scaled_source(source);
  ComplexField d = terms[0];
  for (std::size_t k = 0; k < d.values().size(); ++k) d.values()[k] -= e.values()[k];
  terms.push_back(insertion_sweep(free, v, d, &e));
  for (std::size_t n = 2; n <= order; ++n)
    terms.push_back(insertion_sweep(free, v, terms.back(), nullptr));
  return terms;
}

Orbit dyson_orbit(const TimeStepper& free, const Potential& v, const EventWavefunction& source,
                  std::size_t order) {
  const auto terms = dyson_terms(free, v, source, order);
  ComplexField sum(free.grid());
  for (const auto& t : terms)
    for (std::size_t k = 0; k < sum.values().size(); ++k) sum.values()[k] += t.values()[k];
  Orbit orbit{std::move(sum), std::make_shared<const EventWavefunction>(source),
              OrbitVariant::retarded, 0.0};
  const auto [first, last] = conserved_range(orbit);
  if (first <= last) {
    const auto rho = particle_marginal(orbit.psi);
    double s = 0;
    for (std::size_t i = first; i <= last; ++i) s += rho[i];
    orbit.charge = s / static_cast<double>(last - first + 1);
  }
  return orbit;
}

ComplexField dyson_recursion_rhs(const TimeStepper& free, const Potential& v,
                                 const EventWavefunction& source, const ComplexField& psi) {
  check_same_grid(free, source);
  if (!(psi.grid() == free.grid())) throw std::invalid_argument("dyson rhs: grid mismatch");
  const ComplexField e = scaled_source(source);
  ComplexField d = psi;
  for (std::size_t k = 0; k < d.values().size(); ++k) d.values()[k] -= e.values()[k];
  ComplexField rhs = insertion_sweep(free, v, d, &e);
  const ComplexField phi0 = make_orbit(free, source, OrbitVariant::retarded).psi;
  for (std::size_t k = 0; k < rhs.values().size(); ++k) rhs.values()[k] += phi0.values()[k];
  return rhs;
}

cplx transition_amplitude(const TimeStepper& free, const Potential& v,
                          const EventWavefunction& initial, const EventWavefunction& final_event,
                          std::size_t order) {
  const Orbit orbit = dyson_orbit(free, v, initial, order);
  const EventWavefunction psi(orbit.psi, Representation::spacetime, true);
  return inner_product(final_event, psi);
}

DiscreteContinuumModel DiscreteContinuumModel::flat(double level, double lo, double hi,
                                                    std::size_t n_omega, double density,
                                                    cplx coupling, double hbar) {
  if (n_omega < 2 || !(lo < hi)) throw std::invalid_argument("flat continuum: bad band");
  DiscreteContinuumModel m;
  m.hbar = hbar;
  m.levels = {level};
  const double dw = (hi - lo) / static_cast<double>(n_omega);
  for (std::size_t j = 0; j < n_omega; ++j)
    m.omega.push_back(lo + (static_cast<double>(j) + 0.5) * dw);
  m.density.assign(n_omega, density);
  m.coupling = {std::vector<cplx>(n_omega, coupling)};
  return m;
}

double DiscreteContinuumModel::d_omega() const {
  if (omega.size() < 2) throw std::invalid_argument("continuum: need at least two ω points");
  return (omega.back() - omega.front()) / static_cast<double>(omega.size() - 1);
}

void DiscreteContinuumModel::validate() const {
  if (!(hbar > 0)) throw std::invalid_argument("continuum: hbar must be > 0");
  if (omega.size() < 2) throw std::invalid_argument("continuum: need at least two ω points");
  if (density.size() != omega.size())
    throw std::invalid_argument("continuum: density and ω grid sizes differ");
  if (coupling.size() != levels.size())
    throw std::invalid_argument("continuum: one coupling row per level required");
  for (const auto& row : coupling)
    if (row.size() != omega.size())
      throw std::invalid_argument("continuum: coupling row size differs from the ω grid");
  const double dw = d_omega();
  if (!(dw > 0)) throw std::invalid_argument("continuum: ω grid must be increasing");
  for (std::size_t j = 1; j < omega.size(); ++j)
    if (std::abs(omega[j] - omega[j - 1] - dw) > 1e-9 * dw)
      throw std::invalid_argument("continuum: ω grid must be uniform");
  for (double r : density)
    if (!(r >= 0)) throw std::invalid_argument("continuum: density must be ≥ 0");
}

GoldenRuleRate golden_rule_rate(const DiscreteContinuumModel& model, std::size_t level) {
  model.validate();
  if (level >= model.levels.size()) throw std::invalid_argument("golden rule: bad level index");
  const double c = 2.0 * std::numbers::pi / model.hbar;
  const auto& w = model.omega;
  const auto& v = model.coupling[level];
  GoldenRuleRate r;
  r.resolved.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) r.resolved[j] = c * model.density[j] * std::norm(v[j]);
  const double wn = model.levels[level];
  if (wn < w.front() || wn > w.back()) return r;
  const double dw = model.d_omega();
  const std::size_t j = std::min(static_cast<std::size_t>((wn - w.front()) / dw), w.size() - 2);
  const double f = (wn - w[j]) / dw;
  const double rho = (1 - f) * model.density[j] + f * model.density[j + 1];
  const double v2 = (1 - f) * std::norm(v[j]) + f * std::norm(v[j + 1]);
  r.gamma = c * rho * v2;
  return r;
}

namespace {

template <class Matrix>
std::vector<double> survival_from(const Matrix& h, Eigen::Index level, double hbar,
                                  const std::vector<double>& times) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) throw QetError("survival_exact: eigensolver failed");
  const Eigen::VectorXd energies = solver.eigenvalues();
  const Eigen::VectorXd weights = solver.eigenvectors().row(level).cwiseAbs2().transpose();
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    cplx a{};
    for (Eigen::Index k = 0; k < energies.size(); ++k)
      a += weights(k) * std::polar(1.0, -energies(k) * t / hbar);
    out.push_back(std::norm(a));
  }
  return out;
}

}  // namespace

std::vector<double> survival_exact(const DiscreteContinuumModel& model, std::size_t level,
                                   const std::vector<double>& times) {
  model.validate();
  if (level >= model.levels.size()) throw std::invalid_argument("survival: bad level index");
  const auto n_l = static_cast<Eigen::Index>(model.levels.size());
  const auto n_c = static_cast<Eigen::Index>(model.omega.size());
  const double hbar = model.hbar, dw = model.d_omega();
  bool real = true;
  for (const auto& row : model.coupling)
    for (auto c : row) real = real && c.imag() == 0.0;

  auto fill = [&](auto& h) {
    using Scalar = typename std::decay_t<decltype(h)>::Scalar;
    h.setZero(n_l + n_c, n_l + n_c);
    for (Eigen::Index n = 0; n < n_l; ++n) h(n, n) = hbar * model.levels[static_cast<std::size_t>(n)];
    for (Eigen::Index j = 0; j < n_c; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      h(n_l + j, n_l + j) = hbar * model.omega[ju];
      const double w = std::sqrt(hbar * model.density[ju] * dw);
      for (Eigen::Index n = 0; n < n_l; ++n) {
        const cplx c = w * model.coupling[static_cast<std::size_t>(n)][ju];
        if constexpr (std::is_same_v<Scalar, double>) {
          h(n, n_l + j) = c.real();
          h(n_l + j, n) = c.real();
        } else {
          h(n, n_l + j) = c;
          h(n_l + j, n) = std::conj(c);
        }
      }
    }
  };
  const auto lvl = static_cast<Eigen::Index>(level);
  if (real) {
    Eigen::MatrixXd h;
    fill(h);
    return survival_from(h, lvl, hbar, times);
  }
  Eigen::MatrixXcd h;
  fill(h);
  return survival_from(h, lvl, hbar, times);
}

double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& survival) {
  if (times.size() != survival.size() || times.size() < 2)
    throw std::invalid_argument("fit_decay_rate: need matching samples");
  const double n = static_cast<double>(times.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(survival[i] > 0)) throw QetError("fit_decay_rate: survival must be positive");
    const double y = std::log(survival[i]);
    st += times[i];
    sy += y;
    stt += times[i] * times[i];
    sty += times[i] * y;
  }
  return -(n * sty - st * sy) / (n * stt - st * st);
}

GoldenRuleComparison compare_golden_rule(const DiscreteContinuumModel& model, std::size_t level,
                                         std::size_t samples) {
  GoldenRuleComparison c;
  c.gamma_formula = golden_rule_rate(model, level).gamma;
  if (!(c.gamma_formula > 0)) throw QetError("golden rule: Γ = 0, nothing to fit");
  if (samples < 2) throw std::invalid_argument("golden rule: need at least two samples");
  c.t_begin = 0.1 / c.gamma_formula;
  c.t_end = 1.0 / c.gamma_formula;
  std::vector<double> times(samples);
  for (std::size_t i = 0; i < samples; ++i)
    times[i] = c.t_begin + (c.t_end - c.t_begin) * static_cast<double>(i) /
                               static_cast<double>(samples - 1);
  c.gamma_fit = fit_decay_rate(times, survival_exact(model, level, times));
  c.relative_error = std::abs(c.gamma_fit - c.gamma_formula) / c.gamma_formula;
  return c;
}

double first_order_transition_probability(const DiscreteContinuumModel& model,
                                          std::size_t level, double horizon) {
  model.validate();
  if (level >= model.levels.size()) throw std::invalid_argument("transition: bad level index");
  const double hbar = model.hbar, dw = model.d_omega();
  double p = 0;
  for (std::size_t j = 0; j < model.omega.size(); ++j) {
    const double v2 = hbar * model.density[j] * dw * std::norm(model.coupling[level][j]);
    const double delta = model.omega[j] - model.levels[level];
    // |∫₀ᵀ e^{iΔt} dt|² = T² sinc²(ΔT/2)
    const double x = 0.5 * delta * horizon;
    const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
    p += v2 / (hbar * hbar) * horizon * horizon * sinc * sinc;
  }
  return p;
}

RegimeCheck golden_rule_regime(const DiscreteContinuumModel& model, std::size_t level,
                               const std::vector<double>& horizons) {
  if (horizons.size() < 2) throw std::invalid_argument("regime check: need ≥ 2 horizons");
  const double gamma = golden_rule_rate(model, level).gamma;
  const double n = static_cast<double>(horizons.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (double t : horizons) {
    const double y = first_order_transition_probability(model, level, t);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  RegimeCheck r;
  r.gamma_linear = (n * sty - st * sy) / (n * stt - st * st);
  r.relative_error = gamma > 0 ? std::abs(r.gamma_linear - gamma) / gamma : 0.0;
  const auto [lo, hi] = std::minmax_element(horizons.begin(), horizons.end());
  r.gamma_t_max = gamma * *hi;
  r.bandwidth_t_min = (model.omega.back() - model.omega.front()) * *lo;
  return r;
}

SpacetimeGrid ScatteringSetup::time_grid() const {
  if (!(horizon > 0) || n_steps < 1) throw std::invalid_argument("scattering: bad horizon");
  const double dt = horizon / static_cast<double>(n_steps);
  return make_grid(-0.5 * horizon, -0.5 * horizon + dt * static_cast<double>(n_steps + 1),
                   n_steps + 1, x_min, x_max, n_x, hbar);
}

double ScatteringSetup::dp() const {
  return 2.0 * std::numbers::pi * hbar / (x_max - x_min);
}

double ScatteringSetup::omega(double p) const { return p * p / (2.0 * mass * hbar); }

std::size_t ScatteringSetup::momentum_index(double p) const {
  const double k = p / dp();
  const double r = std::round(k);
  const double half = static_cast<double>(n_x) / 2.0;
  if (std::abs(k - r) > 1e-9 * std::max(1.0, std::abs(k)) || r < -half || r >= half)
    throw std::invalid_argument(fmt::format("momentum {} is not on the grid", p));
  const long ki = static_cast<long>(r);
  return static_cast<std::size_t>(ki >= 0 ? ki : ki + static_cast<long>(n_x));
}

cplx potential_matrix_element(const ScatteringSetup& setup, double p, double p_prime) {
  const double dx = (setup.x_max - setup.x_min) / static_cast<double>(setup.n_x);
  const double q = (p - p_prime) / setup.hbar;
  cplx sum{};
  for (std::size_t j = 0; j < setup.n_x; ++j) {
    const double x = setup.x_min + static_cast<double>(j) * dx;
    sum += setup.potential(0.0, x) * std::polar(1.0, -q * x);
  }
  return sum * dx / (2.0 * std::numbers::pi * setup.hbar);
}

double finite_time_delta(double horizon, double d_omega) {
  const double x = 0.5 * horizon * d_omega;
  const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
  return horizon / (2.0 * std::numbers::pi) * sinc;
}

BornAmplitude born_smatrix(const ScatteringSetup& setup, double p, double p_prime) {
  setup.momentum_index(p);
  setup.momentum_index(p_prime);
  if (setup.potential.time_dependent())
    throw std::invalid_argument("born_smatrix: potential must be time independent");
  const double wp = setup.omega(p), wq = setup.omega(p_prime);
  const cplx phase = std::polar(1.0, -0.5 * (wp + wq) * setup.horizon);
  const bool same = setup.momentum_index(p) == setup.momentum_index(p_prime);
  const cplx scattered = -cplx{0.0, 2.0 * std::numbers::pi / setup.hbar} *
                         finite_time_delta(setup.horizon, wp - wq) *
                         potential_matrix_element(setup, p, p_prime);
  BornAmplitude r;
  r.scattered = phase * scattered;
  r.value = phase * ((same ? 1.0 / setup.dp() : 0.0) + scattered);
  r.on_shell = std::abs(wp - wq) <= 1e-12 * std::max(1.0, wp);
  return r;
}

std::vector<cplx> exact_smatrix_column(const ScatteringSetup& setup, double p_prime) {
  setup.momentum_index(p_prime);
  if (setup.potential.time_dependent())
    throw std::invalid_argument("exact_smatrix: potential must be time independent");
  const SpacetimeGrid g = setup.time_grid();
  auto free = std::make_shared<const EvolutionKernel>(
      g, HamiltonianSpec{setup.mass, Potential::zero()}, Integrator::split_step);
  const PerturbedKernel kernel(free, setup.potential);

  const double length = setup.x_max - setup.x_min;
  std::vector<cplx> psi(g.n_x());
  for (std::size_t j = 0; j < g.n_x(); ++j)
    psi[j] = std::polar(1.0 / std::sqrt(length), p_prime * g.x(j) / setup.hbar);
  psi = evolve_indices(kernel, psi, 0, setup.n_steps);

  // ⟨u_p|ψ⟩ = (dx/√L) Σ_j e^{-ip x_j/ħ} ψ_j
  detail::dft(psi, -1);
  std::vector<cplx> column(g.n_x());
  for (std::size_t b = 0; b < g.n_x(); ++b) {
    const double p = g.momentum(b);
    column[b] = psi[b] * std::polar(g.dx() / std::sqrt(length), -p * g.x_min() / setup.hbar) /
                setup.dp();
  }
  return column;
}

cplx exact_smatrix(const ScatteringSetup& setup, double p, double p_prime) {
  const std::size_t b = setup.momentum_index(p);
  return exact_smatrix_column(setup, p_prime)[b];
}

}  // namespace qet
