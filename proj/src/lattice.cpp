#include "qet/lattice.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include <fmt/format.h>

#include "fft.hpp"

namespace qet {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

std::string to_string(Representation rep) {
  return rep == Representation::spacetime ? "spacetime" : "energy-momentum";
}

Representation representation_from_string(const std::string& name) {
  if (name == "spacetime") return Representation::spacetime;
  if (name == "energy-momentum") return Representation::energy_momentum;
  throw std::invalid_argument("unknown representation '" + name + "'");
}

SpacetimeGrid SpacetimeGrid::make(double t_min, double t_max, std::size_t n_t, double x_min,
                                  double x_max, std::size_t n_x, double hbar) {
  if (n_t < 2 || n_x < 2)
    throw std::invalid_argument(fmt::format("grid counts must be >= 2 (n_t={}, n_x={})", n_t, n_x));
  if (!(t_max > t_min) || !(x_max > x_min))
    throw std::invalid_argument("grid extents must be positive (t_max > t_min, x_max > x_min)");
  if (!(hbar > 0) || !std::isfinite(hbar)) throw std::invalid_argument("hbar must be positive");
  SpacetimeGrid g;
  g.t_min_ = t_min;
  g.t_max_ = t_max;
  g.n_t_ = n_t;
  g.x_min_ = x_min;
  g.x_max_ = x_max;
  g.n_x_ = n_x;
  g.hbar_ = hbar;
  g.dt_ = (t_max - t_min) / static_cast<double>(n_t);
  g.dx_ = (x_max - x_min) / static_cast<double>(n_x);
  return g;
}

SpacetimeGrid make_grid(double t_min, double t_max, std::size_t n_t, double x_min,
                        double x_max, std::size_t n_x, double hbar) {
  return SpacetimeGrid::make(t_min, t_max, n_t, x_min, x_max, n_x, hbar);
}

long folded_index(std::size_t k, std::size_t n) {
  const auto kk = static_cast<long>(k);
  const auto nn = static_cast<long>(n);
  return 2 * kk < nn ? kk : kk - nn;
}

double SpacetimeGrid::dE() const { return two_pi * hbar_ / (static_cast<double>(n_t_) * dt_); }
double SpacetimeGrid::dp() const { return two_pi * hbar_ / (static_cast<double>(n_x_) * dx_); }

double SpacetimeGrid::energy(std::size_t a) const {
  return static_cast<double>(folded_index(a, n_t_)) * dE();
}

double SpacetimeGrid::momentum(std::size_t b) const {
  return static_cast<double>(folded_index(b, n_x_)) * dp();
}

double SpacetimeGrid::cell_weight(Representation rep) const {
  return rep == Representation::spacetime ? dt_ * dx_ : dE() * dp();
}

std::size_t SpacetimeGrid::time_index(double t) const {
  const double pos = (t - t_min_) / dt_;
  const double idx = std::round(pos);
  if (std::abs(pos - idx) > 1e-9 || idx < 0 || idx >= static_cast<double>(n_t_))
    throw std::invalid_argument(fmt::format("time {} is not a grid node", t));
  return static_cast<std::size_t>(idx);
}

namespace {
std::size_t nearest_bin(double value, double spacing, std::size_t n) {
  const long k = std::lround(value / spacing);
  const long nn = static_cast<long>(n);
  return static_cast<std::size_t>(((k % nn) + nn) % nn);
}
}  // namespace

std::size_t SpacetimeGrid::nearest_energy_bin(double E) const { return nearest_bin(E, dE(), n_t_); }
std::size_t SpacetimeGrid::nearest_momentum_bin(double p) const {
  return nearest_bin(p, dp(), n_x_);
}

ComplexField::ComplexField(SpacetimeGrid grid) : grid_(grid), values_(grid.size()) {}

ComplexField::ComplexField(SpacetimeGrid grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw std::invalid_argument(
        fmt::format("field has {} values, grid needs {}", values_.size(), grid_.size()));
}

std::span<const cplx> ComplexField::slice(std::size_t i) const {
  return std::span<const cplx>(values_).subspan(i * grid_.n_x(), grid_.n_x());
}

std::span<cplx> ComplexField::slice(std::size_t i) {
  return std::span<cplx>(values_).subspan(i * grid_.n_x(), grid_.n_x());
}

EventWavefunction::EventWavefunction(SpacetimeGrid grid, Representation rep,
                                     std::vector<cplx> values, bool improper)
    : field_(grid, std::move(values)), rep_(rep), improper_(improper) {}

EventWavefunction::EventWavefunction(ComplexField field, Representation rep, bool improper)
    : field_(std::move(field)), rep_(rep), improper_(improper) {}

double EventWavefunction::norm() const {
  double sum = 0;
  for (const auto& v : values()) sum += std::norm(v);
  return std::sqrt(sum * grid().cell_weight(rep_));
}

std::pair<std::size_t, std::size_t> EventWavefunction::time_support() const {
  const auto n_t = grid().n_t();
  std::size_t first = n_t, last = n_t;
  for (std::size_t i = 0; i < n_t; ++i) {
    for (const auto& v : slice(i)) {
      if (v != cplx{}) {
        if (first == n_t) first = i;
        last = i;
        break;
      }
    }
  }
  return {first, last};
}

cplx inner_product(const EventWavefunction& psi, const EventWavefunction& phi) {
  if (!(psi.grid() == phi.grid())) throw std::invalid_argument("inner_product: grid mismatch");
  if (psi.representation() != phi.representation())
    throw std::invalid_argument("inner_product: representation mismatch");
  cplx sum{};
  const auto a = psi.values();
  const auto b = phi.values();
  for (std::size_t k = 0; k < a.size(); ++k) sum += std::conj(a[k]) * b[k];
  return sum * psi.grid().cell_weight(psi.representation());
}

cplx slice_inner(std::span<const cplx> a, std::span<const cplx> b, double dx) {
  cplx sum{};
  for (std::size_t j = 0; j < a.size(); ++j) sum += std::conj(a[j]) * b[j];
  return sum * dx;
}

double slice_norm2(std::span<const cplx> a, double dx) {
  double sum = 0;
  for (const auto& v : a) sum += std::norm(v);
  return sum * dx;
}

namespace {
double tail_mass(double centre, double sigma, double lo, double hi) {
  const double s = std::sqrt(2.0) * sigma;
  return 0.5 * std::erfc((centre - lo) / s) + 0.5 * std::erfc((hi - centre) / s);
}
}  // namespace

double gaussian_lost_mass(const SpacetimeGrid& grid, const GaussianEventParams& p) {
  const double lt = tail_mass(p.t0, p.sigma_t, grid.t_min(), grid.t_max());
  const double lx = tail_mass(p.x0, p.sigma_x, grid.x_min(), grid.x_max());
  return 1.0 - (1.0 - lt) * (1.0 - lx);
}

EventWavefunction gaussian_event(const SpacetimeGrid& grid, const GaussianEventParams& p) {
  if (!(p.sigma_t > 0) || !(p.sigma_x > 0))
    throw std::invalid_argument("gaussian_event: widths must be positive");
  const double lost = gaussian_lost_mass(grid, p);
  if (lost > p.mass_tolerance)
    throw std::invalid_argument(fmt::format(
        "gaussian_event: envelope loses {:.3g} of its mass outside the grid (tolerance {:.3g})",
        lost, p.mass_tolerance));

  const double hbar = grid.hbar();
  std::vector<cplx> values(grid.size());
  double sum = 0;
  for (std::size_t i = 0; i < grid.n_t(); ++i) {
    const double t = grid.t(i);
    const double et = (t - p.t0) * (t - p.t0) / (4 * p.sigma_t * p.sigma_t);
    for (std::size_t j = 0; j < grid.n_x(); ++j) {
      const double x = grid.x(j);
      const double ex = (x - p.x0) * (x - p.x0) / (4 * p.sigma_x * p.sigma_x);
      const double phase = -(p.E0 * t - p.p0 * x) / hbar;
      const cplx v = std::exp(-(et + ex)) * std::polar(1.0, phase);
      values[i * grid.n_x() + j] = v;
      sum += std::norm(v);
    }
  }
  const double scale = 1.0 / std::sqrt(sum * grid.dt() * grid.dx());
  for (auto& v : values) v *= scale;
  return {grid, Representation::spacetime, std::move(values)};
}

EventWavefunction plane_wave(const SpacetimeGrid& grid, double E, double p) {
  const double hbar = grid.hbar();
  const double off_E = std::remainder(E, grid.dE());
  const double off_p = std::remainder(p, grid.dp());
  if (std::abs(off_E) > 1e-9 * grid.dE() || std::abs(off_p) > 1e-9 * grid.dp())
    std::clog << fmt::format("warning: plane_wave(E={}, p={}) is off the dual grid\n", E, p);
  const double amp = 1.0 / (two_pi * hbar);
  std::vector<cplx> values(grid.size());
  for (std::size_t i = 0; i < grid.n_t(); ++i)
    for (std::size_t j = 0; j < grid.n_x(); ++j)
      values[i * grid.n_x() + j] = std::polar(amp, -(E * grid.t(i) - p * grid.x(j)) / hbar);
  return {grid, Representation::spacetime, std::move(values), true};
}

EventWavefunction sharp_event(const SpacetimeGrid& grid, std::size_t t_index,
                              std::span<const cplx> state) {
  if (t_index >= grid.n_t()) throw std::invalid_argument("sharp_event: time index out of range");
  if (state.size() != grid.n_x()) throw std::invalid_argument("sharp_event: state size mismatch");
  std::vector<cplx> values(grid.size());
  const double w = 1.0 / grid.dt();
  for (std::size_t j = 0; j < grid.n_x(); ++j) values[t_index * grid.n_x() + j] = state[j] * w;
  return {grid, Representation::spacetime, std::move(values), true};
}

std::vector<cplx> gaussian_state(const SpacetimeGrid& grid, double x0, double sigma_x,
                                 double p0) {
  if (!(sigma_x > 0)) throw std::invalid_argument("gaussian_state: width must be positive");
  std::vector<cplx> psi(grid.n_x());
  for (std::size_t j = 0; j < grid.n_x(); ++j) {
    const double x = grid.x(j);
    psi[j] = std::exp(-(x - x0) * (x - x0) / (4 * sigma_x * sigma_x)) *
             std::polar(1.0, p0 * x / grid.hbar());
  }
  const double scale = 1.0 / std::sqrt(slice_norm2(psi, grid.dx()));
  for (auto& v : psi) v *= scale;
  return psi;
}

// Ψ̃(E_a, p_b) = (2πħ)^{-1} Σ Ψ(t_k, x_j) e^{+i(E_a t_k - p_b x_j)/ħ} dt dx.
// With t_k = t_min + k dt the kernel factors into a +sign DFT along t, a -sign
// DFT along x, and the constant phase e^{i(E_a t_min - p_b x_min)/ħ}.
EventWavefunction to_energy_momentum(const EventWavefunction& psi) {
  if (psi.representation() != Representation::spacetime)
    throw std::invalid_argument("to_energy_momentum: input is not in spacetime representation");
  const auto& g = psi.grid();
  std::vector<cplx> data(psi.values().begin(), psi.values().end());
  detail::dft_cols(data, g.n_t(), g.n_x(), +1);
  detail::dft_rows(data, g.n_t(), g.n_x(), -1);
  const double scale = g.dt() * g.dx() / (two_pi * g.hbar());
  for (std::size_t a = 0; a < g.n_t(); ++a)
    for (std::size_t b = 0; b < g.n_x(); ++b)
      data[a * g.n_x() + b] *=
          std::polar(scale, (g.energy(a) * g.t_min() - g.momentum(b) * g.x_min()) / g.hbar());
  return {g, Representation::energy_momentum, std::move(data), psi.improper()};
}

EventWavefunction from_energy_momentum(const EventWavefunction& psi_tilde) {
  if (psi_tilde.representation() != Representation::energy_momentum)
    throw std::invalid_argument(
        "from_energy_momentum: input is not in energy-momentum representation");
  const auto& g = psi_tilde.grid();
  std::vector<cplx> data(psi_tilde.values().begin(), psi_tilde.values().end());
  const double scale = g.dE() * g.dp() / (two_pi * g.hbar());
  for (std::size_t a = 0; a < g.n_t(); ++a)
    for (std::size_t b = 0; b < g.n_x(); ++b)
      data[a * g.n_x() + b] *=
          std::polar(scale, -(g.energy(a) * g.t_min() - g.momentum(b) * g.x_min()) / g.hbar());
  detail::dft_cols(data, g.n_t(), g.n_x(), -1);
  detail::dft_rows(data, g.n_t(), g.n_x(), +1);
  return {g, Representation::spacetime, std::move(data), psi_tilde.improper()};
}

}  // namespace qet
