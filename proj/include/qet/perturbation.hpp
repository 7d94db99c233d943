// Dyson expansion of the retarded propagator, transition amplitudes, the
// golden-rule rate with its diagonalization oracle, and the first-order
// S-matrix with its propagation oracle.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qet/lattice.hpp"
#include "qet/observables.hpp"
#include "qet/propagator.hpp"

namespace qet {

/// Stepper for Ĥ₀ + V built around a free stepper U₀ by treating V with the
/// trapezoid (Crank–Nicolson) rule in the interaction picture:
///   y_k = (1 + iβV_k)^{-1} U₀(t_k, t_{k-1}) (1 - iβV_{k-1}) y_{k-1},  β = dt/2ħ.
/// Exactly unitary, second order, and its retarded orbits satisfy the discrete
/// recursive Dyson equation (see dyson_recursion_rhs) to round-off.
class PerturbedKernel final : public TimeStepper {
 public:
  PerturbedKernel(std::shared_ptr<const TimeStepper> free, Potential v);

  const SpacetimeGrid& grid() const override { return free_->grid(); }
  void step(std::span<cplx> state, std::size_t from_index, int direction) const override;
  std::string describe() const override;

 private:
  void sample(std::size_t index, std::vector<double>& out) const;

  std::shared_ptr<const TimeStepper> free_;
  Potential v_;
  std::vector<double> static_v_;
};

/// Quadrature weight (in units of dt) of the V insertion at t_m when
/// evaluating the orbit at t_k: 1 for m < k, 1/2 for m = k, 0 for m > k.
/// The last case is the implicit time ordering of Ĝ⁺.
double insertion_weight(std::size_t k, std::size_t m);

/// Series terms φ⁽⁰⁾ … φ⁽ⁿ⁾ of the retarded orbit in powers of V. φ⁽⁰⁾ is the
/// free retarded orbit; each further term costs one forward sweep.
std::vector<ComplexField> dyson_terms(const TimeStepper& free, const Potential& v,
                                      const EventWavefunction& source, std::size_t order);

/// Retarded orbit of Ĝ₀⁺ Σ_{k≤n} ((1/iħ)V̂Ĝ₀⁺)^k Ψ.
Orbit dyson_orbit(const TimeStepper& free, const Potential& v, const EventWavefunction& source,
                  std::size_t order);

/// Right side of ψ = Ĝ₀⁺Ψ + (1/iħ)Ĝ₀⁺V̂ψ evaluated with a given retarded
/// orbit ψ (for instance the exact one from PerturbedKernel).
ComplexField dyson_recursion_rhs(const TimeStepper& free, const Potential& v,
                                 const EventWavefunction& source, const ComplexField& psi);

/// ⟨Φ_final | ψ⁽≤n⁾⟩ with ψ⁽≤n⁾ the Dyson orbit of the initial event.
cplx transition_amplitude(const TimeStepper& free, const Potential& v,
                          const EventWavefunction& initial, const EventWavefunction& final_event,
                          std::size_t order);

/// Discrete levels ω_n coupled to a continuum sampled on a uniform ω grid.
/// Continuum states are normalized to δ(ω-ω')/ρ(ω); the discretized state at
/// ω_j carries weight ħρ(ω_j)dω, so V_n(ω) has units of energy·(energy)^{-1/2}.
struct DiscreteContinuumModel {
  double hbar = 1.0;
  std::vector<double> levels;
  std::vector<double> omega;
  std::vector<double> density;
  std::vector<std::vector<cplx>> coupling;  ///< coupling[n][j] = V_n(ω_j)

  /// Cell-centred grid on [lo, hi] with constant ρ and one level coupled by g.
  static DiscreteContinuumModel flat(double level, double lo, double hi, std::size_t n_omega,
                                     double density, cplx coupling, double hbar = 1.0);

  double d_omega() const;
  /// Throws std::invalid_argument on inconsistent sizes, non-uniform grid or ρ < 0.
  void validate() const;
};

struct GoldenRuleRate {
  double gamma = 0;              ///< Γ_n = (2π/ħ) ρ(ω_n) |V_n(ω_n)|²
  std::vector<double> resolved;  ///< (2π/ħ) ρ(ω_j) |V_n(ω_j)|² on the ω grid
};

GoldenRuleRate golden_rule_rate(const DiscreteContinuumModel& model, std::size_t level);

/// |⟨n|e^{-iĤt/ħ}|n⟩|² from dense diagonalization of the discretized model.
std::vector<double> survival_exact(const DiscreteContinuumModel& model, std::size_t level,
                                   const std::vector<double>& times);

/// -slope of the least-squares line through (t, ln P(t)).
double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& survival);

struct GoldenRuleComparison {
  double gamma_formula = 0;
  double gamma_fit = 0;
  double relative_error = 0;
  double t_begin = 0, t_end = 0;
};

/// Fits the exact survival over t ∈ [0.1/Γ, 1/Γ] and compares with Γ.
GoldenRuleComparison compare_golden_rule(const DiscreteContinuumModel& model, std::size_t level,
                                         std::size_t samples = 200);

/// First-order Σ_j |c_j(T)|² with c_j(T) = (1/iħ)∫₀ᵀ v_j e^{i(ω_j-ω_n)t} dt.
double first_order_transition_probability(const DiscreteContinuumModel& model,
                                          std::size_t level, double horizon);

struct RegimeCheck {
  double gamma_linear = 0;  ///< slope of the first-order probability in T
  double relative_error = 0;
  double gamma_t_max = 0;     ///< Γ·T_max (should be ≪ 1)
  double bandwidth_t_min = 0;  ///< (continuum width)·T_min (should be ≫ 1)
};

RegimeCheck golden_rule_regime(const DiscreteContinuumModel& model, std::size_t level,
                               const std::vector<double>& horizons);

struct ScatteringSetup {
  double mass = 1.0;
  double hbar = 1.0;
  Potential potential;  ///< time independent
  double x_min = -20, x_max = 20;
  std::size_t n_x = 256;
  double horizon = 10.0;  ///< T; the evolution runs over [-T/2, T/2]
  std::size_t n_steps = 200;

  /// t_min = -T/2, dt = T/n_steps, n_t = n_steps + 1.
  SpacetimeGrid time_grid() const;
  double dp() const;
  double omega(double p) const;  ///< p²/(2mħ)
  /// Index of p on the dual momentum grid; throws if p is off the grid.
  std::size_t momentum_index(double p) const;
};

/// (p|V̂|p') = (2πħ)^{-1} Σ_j V(x_j) e^{-i(p-p')x_j/ħ} dx.
cplx potential_matrix_element(const ScatteringSetup& setup, double p, double p_prime);

/// (T/2π) sinc(TΔω/2)
double finite_time_delta(double horizon, double d_omega);

struct BornAmplitude {
  cplx value;      ///< full first-order S(p, p')
  cplx scattered;  ///< first-order term only (without the δ_pp'/Δp part)
  bool on_shell;   ///< ω_p = ω_p'
};

/// S(p,p') ≈ e^{-i(ω_p+ω_p')T/2}{δ_pp'/Δp - (2πi/ħ) δ_T(ω_p-ω_p') (p|V̂|p')}.
BornAmplitude born_smatrix(const ScatteringSetup& setup, double p, double p_prime);

/// ⟨p|U(T/2,-T/2)|p'⟩/Δp from propagation of the box plane wave p' with the
/// perturbed kernel around the exact free split step.
cplx exact_smatrix(const ScatteringSetup& setup, double p, double p_prime);
/// All ⟨p_b|U|p'⟩/Δp for b over the momentum grid (one propagation).
std::vector<cplx> exact_smatrix_column(const ScatteringSetup& setup, double p_prime);

}  // namespace qet
