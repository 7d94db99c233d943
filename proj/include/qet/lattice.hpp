// Discretized (1+1)-dimensional spacetime and its energy-momentum dual.
//
// Fields are stored row-major: one row per time slice, n_x entries per row.
// In the energy-momentum representation rows are indexed by energy bins and
// columns by momentum bins, both in natural DFT order (see SpacetimeGrid::energy
// and SpacetimeGrid::momentum for the folded physical values).
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qet {

using cplx = std::complex<double>;

class QetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Representation { spacetime, energy_momentum };

std::string to_string(Representation rep);
Representation representation_from_string(const std::string& name);

class SpacetimeGrid {
 public:
  /// Throws std::invalid_argument for unordered bounds or counts < 2.
  static SpacetimeGrid make(double t_min, double t_max, std::size_t n_t,
                            double x_min, double x_max, std::size_t n_x,
                            double hbar = 1.0);

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t n_t() const { return n_t_; }
  std::size_t n_x() const { return n_x_; }
  std::size_t size() const { return n_t_ * n_x_; }
  double hbar() const { return hbar_; }
  double dt() const { return dt_; }
  double dx() const { return dx_; }

  double t(std::size_t i) const { return t_min_ + static_cast<double>(i) * dt_; }
  double x(std::size_t j) const { return x_min_ + static_cast<double>(j) * dx_; }

  /// Energy spacing 2πħ/(n_t dt) of the dual grid.
  double dE() const;
  /// Momentum spacing 2πħ/(n_x dx) of the dual grid.
  double dp() const;
  /// Folded dual frequencies; index n/2 maps to the negative Nyquist value.
  double energy(std::size_t a) const;
  double momentum(std::size_t b) const;

  /// Quadrature weight of one cell: dt·dx or dE·dp.
  double cell_weight(Representation rep) const;

  /// Index of the node at time t; throws if t is not within 1e-9·dt of a node.
  std::size_t time_index(double t) const;
  /// Index of the dual bin nearest to (E, p).
  std::size_t nearest_energy_bin(double E) const;
  std::size_t nearest_momentum_bin(double p) const;

  bool operator==(const SpacetimeGrid& other) const = default;

 private:
  SpacetimeGrid() = default;

  double t_min_ = 0, t_max_ = 0, x_min_ = 0, x_max_ = 0;
  std::size_t n_t_ = 0, n_x_ = 0;
  double hbar_ = 1, dt_ = 0, dx_ = 0;
};

/// Signed integer frequency of DFT bin k on an n-point axis.
long folded_index(std::size_t k, std::size_t n);

/// Complex field on a grid in the spacetime layout. Value type; no
/// normalization is implied.
class ComplexField {
 public:
  explicit ComplexField(SpacetimeGrid grid);
  ComplexField(SpacetimeGrid grid, std::vector<cplx> values);

  const SpacetimeGrid& grid() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  std::span<cplx> values() { return values_; }
  std::span<const cplx> slice(std::size_t i) const;
  std::span<cplx> slice(std::size_t i);
  cplx operator()(std::size_t i, std::size_t j) const { return values_[i * grid_.n_x() + j]; }
  cplx& operator()(std::size_t i, std::size_t j) { return values_[i * grid_.n_x() + j]; }

  std::vector<cplx> release() && { return std::move(values_); }

 private:
  SpacetimeGrid grid_;
  std::vector<cplx> values_;
};

/// An event ket |Ψ⟩ in one of the two representations.
///
/// Sharp-time events (a single slice weighted by 1/dt) are flagged improper;
/// they are discrete deltas and skip unit-norm checks.
class EventWavefunction {
 public:
  EventWavefunction(SpacetimeGrid grid, Representation rep, std::vector<cplx> values,
                    bool improper = false);
  EventWavefunction(ComplexField field, Representation rep, bool improper = false);

  const SpacetimeGrid& grid() const { return field_.grid(); }
  Representation representation() const { return rep_; }
  bool improper() const { return improper_; }
  const ComplexField& field() const { return field_; }
  std::span<const cplx> values() const { return field_.values(); }
  std::span<const cplx> slice(std::size_t i) const { return field_.slice(i); }
  cplx operator()(std::size_t i, std::size_t j) const { return field_(i, j); }

  double norm() const;

  /// First and last time slice carrying nonzero amplitude; {n_t, n_t} if empty.
  std::pair<std::size_t, std::size_t> time_support() const;

 private:
  ComplexField field_;
  Representation rep_;
  bool improper_;
};

SpacetimeGrid make_grid(double t_min, double t_max, std::size_t n_t, double x_min,
                        double x_max, std::size_t n_x, double hbar = 1.0);

/// ⟨Ψ|Φ⟩ as a Riemann sum with the representation's cell weight.
cplx inner_product(const EventWavefunction& psi, const EventWavefunction& phi);

struct GaussianEventParams {
  double t0 = 0;
  double sigma_t = 1;  ///< standard deviation of |Ψ|² along t
  double x0 = 0;
  double sigma_x = 1;  ///< standard deviation of |Ψ|² along x
  double E0 = 0;
  double p0 = 0;
  double mass_tolerance = 1e-6;
};

/// Continuum mass of the Gaussian envelope lying outside the grid extents.
double gaussian_lost_mass(const SpacetimeGrid& grid, const GaussianEventParams& params);

/// Normalized Gaussian envelope times the carrier e^{-i(E0 t - p0 x)/ħ}.
/// Throws std::invalid_argument when the lost mass exceeds params.mass_tolerance.
EventWavefunction gaussian_event(const SpacetimeGrid& grid, const GaussianEventParams& params);

/// Improper plane wave (2πħ)^{-1} e^{-i(Et - px)/ħ}.
EventWavefunction plane_wave(const SpacetimeGrid& grid, double E, double p);

/// Sharp-time event |t_i, ψ0⟩: the slice holds ψ0/dt so that Σ_τ Ψ(τ)dt = ψ0.
EventWavefunction sharp_event(const SpacetimeGrid& grid, std::size_t t_index,
                              std::span<const cplx> state);

/// Normalized spatial Gaussian wavepacket ψ(x) with |ψ|² of width sigma_x.
std::vector<cplx> gaussian_state(const SpacetimeGrid& grid, double x0, double sigma_x,
                                 double p0);

EventWavefunction to_energy_momentum(const EventWavefunction& psi);
EventWavefunction from_energy_momentum(const EventWavefunction& psi_tilde);

/// Σ_x conj(a)·b·dx over one slice.
cplx slice_inner(std::span<const cplx> a, std::span<const cplx> b, double dx);
double slice_norm2(std::span<const cplx> a, double dx);

}  // namespace qet
