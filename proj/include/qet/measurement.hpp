// Window statistics, complete measurements, outcome events and sampled
// quantum histories.
#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qet/lattice.hpp"
#include "qet/observables.hpp"
#include "qet/propagator.hpp"
#include "qet/window.hpp"

namespace qet {

/// Raised when a window has W ≤ 0 or non-finite W on the given orbit.
class ImproperWindowError : public QetError {
 public:
  using QetError::QetError;
};

class IdentityProjector final : public Projector {
 public:
  void apply(const SpacetimeGrid& grid, std::size_t t_index, std::span<const cplx> in,
             std::span<cplx> out) const override;
  std::string describe() const override { return "identity"; }
};

/// Indicator of x in [lo, hi).
class PositionBinProjector final : public Projector {
 public:
  PositionBinProjector(double lo, double hi);
  void apply(const SpacetimeGrid& grid, std::size_t t_index, std::span<const cplx> in,
             std::span<cplx> out) const override;
  std::string describe() const override;

 private:
  double lo_, hi_;
};

/// Indicator of p in [lo, hi) on the dual momentum grid, applied by a DFT of
/// each slice.
class MomentumBinProjector final : public Projector {
 public:
  MomentumBinProjector(double lo, double hi);
  void apply(const SpacetimeGrid& grid, std::size_t t_index, std::span<const cplx> in,
             std::span<cplx> out) const override;
  std::string describe() const override;

 private:
  double lo_, hi_;
};

/// Eigen-decomposition of the finite-difference Ĥ at a fixed time. Columns of
/// `vectors` are orthonormal under Σ_x conj(u)v dx.
struct Eigensystem {
  SpacetimeGrid grid;
  Eigen::VectorXd energies;  ///< ascending
  Eigen::MatrixXd vectors;

  std::vector<cplx> state(std::size_t k) const;
};

std::shared_ptr<const Eigensystem> hamiltonian_eigensystem(const SpacetimeGrid& grid,
                                                           const HamiltonianSpec& h,
                                                           double t = 0.0);

/// Projector onto the eigenvectors of Ĥ with energy in [lo, hi).
class SpectralProjector final : public Projector {
 public:
  SpectralProjector(std::shared_ptr<const Eigensystem> system, double lo, double hi);
  void apply(const SpacetimeGrid& grid, std::size_t t_index, std::span<const cplx> in,
             std::span<cplx> out) const override;
  std::string describe() const override;

 private:
  std::shared_ptr<const Eigensystem> system_;
  double lo_, hi_;
  Eigen::MatrixXd basis_;  // selected columns scaled by √dx
};

struct Outcome {
  std::string label;
  std::shared_ptr<const Projector> projector;
};

/// Bins (-∞, e₁), [e₁, e₂), …, [e_k, ∞) for interior edges e₁ < … < e_k.
/// Labels default to "0", "1", ….
std::vector<Outcome> position_partition(const std::vector<double>& edges,
                                        std::vector<std::string> labels = {});
std::vector<Outcome> momentum_partition(const std::vector<double>& edges,
                                        std::vector<std::string> labels = {});
std::vector<Outcome> energy_partition(const SpacetimeGrid& grid, const HamiltonianSpec& h,
                                      const std::vector<double>& edges,
                                      std::vector<std::string> labels = {});
std::vector<Outcome> identity_partition(std::string label = "1");

struct CompleteMeasurement {
  std::vector<Outcome> outcomes;
  ObservationWindow window;
};

/// Checks Σ Π_a = 𝟙, Π_a² = Π_a and Π_aΠ_b = 0 (a ≠ b) on random slices.
/// Throws QetError with the offending labels on violation.
void validate_partition(const std::vector<Outcome>& outcomes, const SpacetimeGrid& grid,
                        double tolerance = 1e-10, std::uint64_t seed = 12345);

/// W = Σ_𝒲 |ψ|² dt dx. Throws ImproperWindowError if W ≤ 0 or non-finite.
double window_weight(const ComplexField& psi, const ObservationWindow& window);

/// (1/W) Σ_𝒲 ⟨Â⟩(t,x) dt dx.
double expectation(const OperatorSpec& op, const ComplexField& psi,
                   const ObservationWindow& window);

struct OutcomeProbability {
  std::string label;
  double probability;
};

/// P(a) = ⟨Π_a⟩(𝒲)/W. Throws QetError if Σ P ≠ 1 beyond 1e-10 or any P is
/// significantly negative.
std::vector<OutcomeProbability> outcome_probabilities(const CompleteMeasurement& m,
                                                      const ComplexField& psi);

/// Ψ_a = (W·P(a))^{-1/2} Π_aψ on 𝒲, zero elsewhere, normalized to unit norm.
/// Throws QetError if P(a) is not positive.
EventWavefunction collapse(const CompleteMeasurement& m, const ComplexField& psi,
                           std::size_t outcome_index);

struct HistoryStage {
  ObservationWindow window;
  std::size_t outcome_index;
  std::string label;
  double probability;
  std::vector<OutcomeProbability> distribution;
  EventWavefunction outcome;
};

struct QuantumHistory {
  std::uint64_t seed;
  OrbitVariant variant;
  std::vector<HistoryStage> stages;
};

/// Throws std::invalid_argument unless the windows are nonempty with strictly
/// increasing, disjoint time ranges.
void validate_history_windows(const std::vector<CompleteMeasurement>& measurements);

/// Sequential measurements: orbit → probabilities → seeded sample → collapse,
/// the outcome seeding the next stage. Improper windows abort with the stage
/// index in the message.
QuantumHistory run_history(const TimeStepper& kernel, const EventWavefunction& initial,
                           const std::vector<CompleteMeasurement>& measurements,
                           OrbitVariant variant, std::uint64_t seed);

}  // namespace qet
