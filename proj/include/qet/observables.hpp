// Canonical operators in the spacetime representation, operator densities,
// marginals, the particle current and the continuity residual.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qet/lattice.hpp"
#include "qet/window.hpp"

namespace qet {

enum class DerivativeScheme { finite_difference, spectral };

std::string to_string(DerivativeScheme scheme);
DerivativeScheme derivative_scheme_from_string(const std::string& name);

/// Real function V(t, x). Default-constructed potentials are identically zero.
class Potential {
 public:
  using Function = std::function<double(double t, double x)>;

  Potential() = default;
  Potential(Function fn, bool time_dependent, std::string description);

  static Potential zero();
  /// ½ m ω² (x - centre)²
  static Potential harmonic(double mass, double omega, double centre = 0.0);
  /// amplitude · exp(-(x - centre)² / (2 width²))
  static Potential gaussian(double amplitude, double centre, double width);
  /// ½ m ω² x² - force · sin(drive · t) · x
  static Potential driven_harmonic(double mass, double omega, double force, double drive);

  double operator()(double t, double x) const { return fn_ ? fn_(t, x) : 0.0; }
  bool is_zero() const { return !fn_; }
  bool time_dependent() const { return time_dependent_; }
  const std::string& description() const { return description_; }

  /// V(t, x_j) for every spatial node.
  void sample(const SpacetimeGrid& grid, double t, std::span<double> out) const;
  /// Same potential multiplied by a constant.
  Potential scaled(double factor) const;

 private:
  Function fn_;
  bool time_dependent_ = false;
  std::string description_ = "zero";
};

struct HamiltonianSpec {
  double mass = 1.0;
  Potential potential;
};

/// Instantaneous projector acting slice by slice. Concrete partitions live in
/// the measurement module.
class Projector {
 public:
  virtual ~Projector() = default;
  virtual void apply(const SpacetimeGrid& grid, std::size_t t_index, std::span<const cplx> in,
                     std::span<cplx> out) const = 0;
  virtual std::string describe() const = 0;
};

enum class OperatorKind {
  identity,
  time,
  position,
  energy,
  momentum,
  hamiltonian,
  multiplicative,
  projector
};

struct OperatorSpec {
  OperatorKind kind = OperatorKind::identity;
  DerivativeScheme scheme = DerivativeScheme::finite_difference;
  HamiltonianSpec hamiltonian;
  Potential multiplier;
  std::shared_ptr<const Projector> proj;

  static OperatorSpec identity();
  static OperatorSpec time();
  static OperatorSpec position();
  /// Ê = iħ∂_t. The t axis is not periodic, so finite differences are the default.
  static OperatorSpec energy(DerivativeScheme scheme = DerivativeScheme::finite_difference);
  static OperatorSpec momentum(DerivativeScheme scheme = DerivativeScheme::spectral);
  static OperatorSpec hamiltonian_op(HamiltonianSpec h,
                                     DerivativeScheme scheme = DerivativeScheme::finite_difference);
  static OperatorSpec multiplicative(Potential f);
  static OperatorSpec projector(std::shared_ptr<const Projector> p);

  std::string describe() const;
};

// Slice-level building blocks, shared with the propagators.
void first_derivative_x(std::span<const cplx> in, std::span<cplx> out, double dx,
                        DerivativeScheme scheme);
void laplacian_x(std::span<const cplx> in, std::span<cplx> out, double dx,
                 DerivativeScheme scheme);
/// out = Ĥ(t) in for one slice.
void apply_hamiltonian_slice(const HamiltonianSpec& h, const SpacetimeGrid& grid, double t,
                             DerivativeScheme scheme, std::span<const cplx> in,
                             std::span<cplx> out);

/// ∂ψ/∂t over the whole field. Finite differences are centered inside and
/// one-sided second order at the two edge slices.
ComplexField time_derivative(const ComplexField& psi, DerivativeScheme scheme);

ComplexField apply(const OperatorSpec& op, const ComplexField& psi);

/// Re{ψ*(t,x) (Âψ)(t,x)} at every node.
std::vector<double> operator_density(const OperatorSpec& op, const ComplexField& psi);

/// Σ_x ⟨Â⟩(t_i, x) dx.
double marginal_density(const OperatorSpec& op, const ComplexField& psi, std::size_t t_index);
/// All marginals at once (one operator application).
std::vector<double> marginal_densities(const OperatorSpec& op, const ComplexField& psi);

/// (ħ/m) Im{ψ* ∂_x ψ}
std::vector<double> current_density(const ComplexField& psi, double mass,
                                     DerivativeScheme scheme = DerivativeScheme::finite_difference);

/// ∂ρ/∂t + ∂j/∂x with centered differences (one-sided at the t edges).
std::vector<double> continuity_residual(
    const ComplexField& psi, const HamiltonianSpec& h,
    DerivativeScheme scheme = DerivativeScheme::finite_difference);

/// √(⟨(Â - ⟨Â⟩)²⟩) over a proper window. Variances down to -1e-10 are clamped
/// to zero; anything more negative throws.
double uncertainty(const OperatorSpec& op, const ComplexField& psi,
                   const ObservationWindow& window);

double max_abs(std::span<const double> values);

}  // namespace qet
