// Unitary time stepping, orbit assembly ψ = ĜΨ (full, retarded, advanced) and
// the conserved charge N.
#pragma once

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qet/lattice.hpp"
#include "qet/observables.hpp"

namespace qet {

enum class Integrator { crank_nicolson, split_step };
enum class OrbitVariant { full, retarded, advanced };

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);
std::string to_string(OrbitVariant variant);
OrbitVariant orbit_variant_from_string(const std::string& name);

/// One-slice propagation on a fixed time grid. step(state, i, +1) maps the
/// slice at t_i to t_{i+1}; step(state, i, -1) maps t_i to t_{i-1} and is the
/// exact inverse of the corresponding forward step.
class TimeStepper {
 public:
  virtual ~TimeStepper() = default;
  virtual const SpacetimeGrid& grid() const = 0;
  virtual void step(std::span<cplx> state, std::size_t from_index, int direction) const = 0;
  virtual std::string describe() const = 0;
};

/// U(t+dt, t) for Ĥ = -(ħ²/2m)∂²_x + V(t,x).
///
/// crank_nicolson: (1 + iĤdt/2ħ)ψ' = (1 - iĤdt/2ħ)ψ with the periodic
/// three-point Laplacian and V sampled at the step midpoint.
/// split_step: Strang splitting e^{-iVdt/2ħ} e^{-ip²dt/2mħ} e^{-iVdt/2ħ} with
/// the kinetic factor applied exactly in momentum space.
class EvolutionKernel final : public TimeStepper {
 public:
  EvolutionKernel(SpacetimeGrid grid, HamiltonianSpec hamiltonian,
                  Integrator integrator = Integrator::crank_nicolson);

  const SpacetimeGrid& grid() const override { return grid_; }
  const HamiltonianSpec& hamiltonian() const { return hamiltonian_; }
  Integrator integrator() const { return integrator_; }

  void step(std::span<cplx> state, std::size_t from_index, int direction) const override;
  std::string describe() const override;

 private:
  void step_crank_nicolson(std::span<cplx> state, double t_mid, int direction) const;
  void step_split(std::span<cplx> state, double t_mid, int direction) const;
  void sample_potential(double t, std::vector<double>& out) const;

  SpacetimeGrid grid_;
  HamiltonianSpec hamiltonian_;
  Integrator integrator_;
  std::vector<double> static_potential_;  // empty when V depends on t
  std::vector<double> kinetic_phase_;     // ħ k²dt/2m per DFT bin (split step)
};

/// U(t_to, t_from)·state. Throws std::invalid_argument if either time is off
/// the grid or the state has the wrong length.
std::vector<cplx> evolve(const TimeStepper& kernel, std::span<const cplx> state, double t_from,
                         double t_to);
std::vector<cplx> evolve_indices(const TimeStepper& kernel, std::span<const cplx> state,
                                 std::size_t from_index, std::size_t to_index);

struct Orbit {
  ComplexField psi;
  std::shared_ptr<const EventWavefunction> source;
  OrbitVariant variant;
  double charge;  ///< mean ρ(t) over the slices where it is conserved

  const SpacetimeGrid& grid() const { return psi.grid(); }
};

/// ψ(t_k) = Σ_τ w(t_k,τ) U(t_k,τ) Ψ(τ) dτ with w = 1, θ(t-τ) or θ(τ-t).
/// The coincident slice τ = t_k belongs to the retarded part, so full =
/// retarded + advanced exactly. Built from one forward and/or one backward
/// sweep.
Orbit make_orbit(const TimeStepper& kernel, const EventWavefunction& source,
                 OrbitVariant variant);

/// Retarded orbit computed only up to (and including) slice last_index; later
/// slices are zero. Used where only an initial segment is needed.
Orbit make_retarded_orbit_until(const TimeStepper& kernel, const EventWavefunction& source,
                                std::size_t last_index);

/// Marginal identity density ρ(t_i) = Σ_x |ψ|² dx for every slice.
std::vector<double> particle_marginal(const ComplexField& psi);

/// Slices on which ρ(t) is conserved: all of them for the full orbit, those
/// after (before) the source support for the retarded (advanced) orbit.
std::pair<std::size_t, std::size_t> conserved_range(const Orbit& orbit);

struct ChargeReport {
  double charge = 0;                ///< N, mean ρ over the valid slices
  double max_relative_deviation = 0;  ///< max |ρ(t) - N| / N
  std::size_t first_index = 0, last_index = 0;
};

/// Throws QetError if there are no valid slices or if the deviation exceeds
/// the tolerance.
ChargeReport conserved_charge(const Orbit& orbit,
                              double tolerance = std::numeric_limits<double>::infinity());

/// max over interior slices of |(iħ∂_t - Ĥ)ψ| divided by max |ψ|.
double schrodinger_residual(const ComplexField& psi, const HamiltonianSpec& h,
                            DerivativeScheme scheme = DerivativeScheme::finite_difference);

}  // namespace qet
