#include "qet/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "fft.hpp"

namespace qet {

void IdentityProjector::apply(const SpacetimeGrid&, std::size_t, std::span<const cplx> in,
                              std::span<cplx> out) const {
  std::copy(in.begin(), in.end(), out.begin());
}

PositionBinProjector::PositionBinProjector(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(lo < hi)) throw std::invalid_argument("position bin: lo must be < hi");
}

void PositionBinProjector::apply(const SpacetimeGrid& grid, std::size_t, std::span<const cplx> in,
                                 std::span<cplx> out) const {
  for (std::size_t j = 0; j < in.size(); ++j) {
    const double x = grid.x(j);
    out[j] = (x >= lo_ && x < hi_) ? in[j] : cplx{};
  }
}

std::string PositionBinProjector::describe() const {
  return fmt::format("x in [{:.10g}, {:.10g})", lo_, hi_);
}

MomentumBinProjector::MomentumBinProjector(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(lo < hi)) throw std::invalid_argument("momentum bin: lo must be < hi");
}

void MomentumBinProjector::apply(const SpacetimeGrid& grid, std::size_t, std::span<const cplx> in,
                                 std::span<cplx> out) const {
  const std::size_t n = in.size();
  std::copy(in.begin(), in.end(), out.begin());
  detail::dft(out, -1);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < n; ++b) {
    const double p = grid.momentum(b);
    out[b] *= (p >= lo_ && p < hi_) ? inv_n : 0.0;
  }
  detail::dft(out, +1);
}

std::string MomentumBinProjector::describe() const {
  return fmt::format("p in [{:.10g}, {:.10g})", lo_, hi_);
}

std::vector<cplx> Eigensystem::state(std::size_t k) const {
  std::vector<cplx> s(static_cast<std::size_t>(vectors.rows()));
  for (std::size_t j = 0; j < s.size(); ++j)
    s[j] = vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
  return s;
}

std::shared_ptr<const Eigensystem> hamiltonian_eigensystem(const SpacetimeGrid& grid,
                                                           const HamiltonianSpec& h, double t) {
  const auto n = static_cast<Eigen::Index>(grid.n_x());
  const double kin = grid.hbar() * grid.hbar() / (2.0 * h.mass * grid.dx() * grid.dx());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m(j, j) += 2.0 * kin + h.potential(t, grid.x(static_cast<std::size_t>(j)));
    m(j, (j + 1) % n) -= kin;
    m(j, (j + n - 1) % n) -= kin;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw QetError("hamiltonian_eigensystem: solver failed");
  return std::make_shared<const Eigensystem>(
      Eigensystem{grid, solver.eigenvalues(), solver.eigenvectors() / std::sqrt(grid.dx())});
}

SpectralProjector::SpectralProjector(std::shared_ptr<const Eigensystem> system, double lo,
                                     double hi)
    : system_(std::move(system)), lo_(lo), hi_(hi) {
  if (!system_) throw std::invalid_argument("spectral projector: null eigensystem");
  if (!(lo < hi)) throw std::invalid_argument("spectral projector: lo must be < hi");
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < system_->energies.size(); ++k)
    if (system_->energies(k) >= lo && system_->energies(k) < hi) cols.push_back(k);
  basis_.resize(system_->vectors.rows(), static_cast<Eigen::Index>(cols.size()));
  const double s = std::sqrt(system_->grid.dx());
  for (std::size_t c = 0; c < cols.size(); ++c)
    basis_.col(static_cast<Eigen::Index>(c)) = system_->vectors.col(cols[c]) * s;
}

void SpectralProjector::apply(const SpacetimeGrid& grid, std::size_t, std::span<const cplx> in,
                              std::span<cplx> out) const {
  if (!(grid == system_->grid)) throw std::invalid_argument("spectral projector: grid mismatch");
  const auto n = static_cast<Eigen::Index>(in.size());
  Eigen::Map<const Eigen::VectorXcd> v(in.data(), n);
  Eigen::Map<Eigen::VectorXcd> w(out.data(), n);
  const Eigen::VectorXcd coeffs = basis_.transpose().cast<cplx>() * v;
  w = basis_.cast<cplx>() * coeffs;
}

std::string SpectralProjector::describe() const {
  return fmt::format("H in [{:.10g}, {:.10g}) ({} states)", lo_, hi_, basis_.cols());
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::vector<std::string> resolve_labels(std::vector<std::string> labels, std::size_t count) {
  if (labels.empty()) {
    for (std::size_t a = 0; a < count; ++a) labels.push_back(std::to_string(a));
  }
  if (labels.size() != count)
    throw std::invalid_argument(
        fmt::format("partition: {} labels given for {} bins", labels.size(), count));
  return labels;
}

template <class Make>
std::vector<Outcome> bins(const std::vector<double>& edges, std::vector<std::string> labels,
                          Make make) {
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k - 1] < edges[k]))
      throw std::invalid_argument("partition: edges must be strictly increasing");
  labels = resolve_labels(std::move(labels), edges.size() + 1);
  std::vector<Outcome> out;
  for (std::size_t a = 0; a <= edges.size(); ++a) {
    const double lo = a == 0 ? -inf : edges[a - 1];
    const double hi = a == edges.size() ? inf : edges[a];
    out.push_back({labels[a], make(lo, hi)});
  }
  return out;
}

}  // namespace

std::vector<Outcome> position_partition(const std::vector<double>& edges,
                                        std::vector<std::string> labels) {
  return bins(edges, std::move(labels),
              [](double lo, double hi) { return std::make_shared<PositionBinProjector>(lo, hi); });
}

std::vector<Outcome> momentum_partition(const std::vector<double>& edges,
                                        std::vector<std::string> labels) {
  return bins(edges, std::move(labels),
              [](double lo, double hi) { return std::make_shared<MomentumBinProjector>(lo, hi); });
}

std::vector<Outcome> energy_partition(const SpacetimeGrid& grid, const HamiltonianSpec& h,
                                      const std::vector<double>& edges,
                                      std::vector<std::string> labels) {
  if (h.potential.time_dependent())
    throw std::invalid_argument("energy partition: Hamiltonian must be time independent");
  auto system = hamiltonian_eigensystem(grid, h);
  return bins(edges, std::move(labels), [&](double lo, double hi) {
    return std::make_shared<SpectralProjector>(system, lo, hi);
  });
}

std::vector<Outcome> identity_partition(std::string label) {
  return {{std::move(label), std::make_shared<IdentityProjector>()}};
}

void validate_partition(const std::vector<Outcome>& outcomes, const SpacetimeGrid& grid,
                        double tolerance, std::uint64_t seed) {
  if (outcomes.empty()) throw QetError("partition: no outcomes");
  const std::size_t n = grid.n_x();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<cplx> f(n), sum(n), tmp(n);
  std::vector<std::vector<cplx>> images(outcomes.size(), std::vector<cplx>(n));
  for (int trial = 0; trial < 3; ++trial) {
    for (auto& v : f) v = {normal(gen), normal(gen)};
    double scale = 0;
    for (auto v : f) scale = std::max(scale, std::abs(v));
    std::fill(sum.begin(), sum.end(), cplx{});
    for (std::size_t a = 0; a < outcomes.size(); ++a) {
      outcomes[a].projector->apply(grid, 0, f, images[a]);
      for (std::size_t j = 0; j < n; ++j) sum[j] += images[a][j];
    }
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(sum[j] - f[j]) > tolerance * scale)
        throw QetError("partition: projectors do not sum to the identity");
    for (std::size_t a = 0; a < outcomes.size(); ++a) {
      for (std::size_t b = 0; b < outcomes.size(); ++b) {
        outcomes[b].projector->apply(grid, 0, images[a], tmp);
        for (std::size_t j = 0; j < n; ++j) {
          const cplx expected = a == b ? images[a][j] : cplx{};
          if (std::abs(tmp[j] - expected) > tolerance * scale)
            throw QetError(fmt::format("partition: '{}' and '{}' violate {}", outcomes[a].label,
                                       outcomes[b].label,
                                       a == b ? "idempotence" : "mutual orthogonality"));
        }
      }
    }
  }
}

double window_weight(const ComplexField& psi, const ObservationWindow& window) {
  if (!(window.grid() == psi.grid())) throw std::invalid_argument("window: grid mismatch");
  std::vector<double> rho(psi.values().size());
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = std::norm(psi.values()[k]);
  const double w = window.integrate(rho);
  if (!(w > 0) || !std::isfinite(w))
    throw ImproperWindowError(
        fmt::format("improper observation window {} (W = {})", window.describe(), w));
  return w;
}

double expectation(const OperatorSpec& op, const ComplexField& psi,
                   const ObservationWindow& window) {
  const double w = window_weight(psi, window);
  return window.integrate(operator_density(op, psi)) / w;
}

namespace {

// Re{ψ* Π ψ} summed over the window, applying Π only on covered slices.
double projector_weight(const Projector& p, const ComplexField& psi,
                        const ObservationWindow& window, std::vector<cplx>& image) {
  const auto& g = psi.grid();
  double sum = 0;
  for (const auto& b : window.boxes()) {
    for (std::size_t i = b.t_begin; i <= b.t_end; ++i) {
      p.apply(g, i, psi.slice(i), image);
      const auto s = psi.slice(i);
      for (std::size_t j = b.x_begin; j <= b.x_end; ++j)
        sum += std::real(std::conj(s[j]) * image[j]);
    }
  }
  return sum * g.dt() * g.dx();
}

}  // namespace

std::vector<OutcomeProbability> outcome_probabilities(const CompleteMeasurement& m,
                                                      const ComplexField& psi) {
  const double w = window_weight(psi, m.window);
  std::vector<OutcomeProbability> out;
  std::vector<cplx> image(psi.grid().n_x());
  double total = 0;
  for (const auto& o : m.outcomes) {
    double p = projector_weight(*o.projector, psi, m.window, image) / w;
    if (p < -1e-10)
      throw QetError(fmt::format("outcome '{}' has negative weight {:.3e}", o.label, p));
    p = std::max(p, 0.0);
    total += p;
    out.push_back({o.label, p});
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw QetError(fmt::format("partition violation: probabilities sum to {:.17g}", total));
  return out;
}

EventWavefunction collapse(const CompleteMeasurement& m, const ComplexField& psi,
                           std::size_t outcome_index) {
  if (outcome_index >= m.outcomes.size()) throw std::invalid_argument("collapse: bad outcome");
  const auto& g = psi.grid();
  const auto& proj = *m.outcomes[outcome_index].projector;
  const double w = window_weight(psi, m.window);
  std::vector<cplx> image(g.n_x());
  const double p = projector_weight(proj, psi, m.window, image) / w;
  if (!(p > 0))
    throw QetError(fmt::format("collapse: outcome '{}' has probability {}",
                               m.outcomes[outcome_index].label, p));
  ComplexField out(g);
  for (const auto& b : m.window.boxes()) {
    for (std::size_t i = b.t_begin; i <= b.t_end; ++i) {
      proj.apply(g, i, psi.slice(i), image);
      for (std::size_t j = b.x_begin; j <= b.x_end; ++j) out(i, j) = image[j];
    }
  }
  // (W·P)^{-1/2} normalizes exactly whenever Π_a commutes with the window
  // restriction; otherwise the residual mismatch is removed by the norm.
  double norm2 = 0;
  for (auto v : out.values()) norm2 += std::norm(v);
  norm2 *= g.dt() * g.dx();
  const double scale = 1.0 / std::sqrt(norm2 > 0 ? norm2 : w * p);
  for (auto& v : out.values()) v *= scale;
  return EventWavefunction(std::move(out), Representation::spacetime);
}

void validate_history_windows(const std::vector<CompleteMeasurement>& measurements) {
  std::size_t previous_end = 0;
  for (std::size_t s = 0; s < measurements.size(); ++s) {
    const auto range = measurements[s].window.time_range();
    if (!range) throw std::invalid_argument(fmt::format("history stage {}: empty window", s));
    if (s > 0 && range->first <= previous_end)
      throw std::invalid_argument(fmt::format(
          "history stage {}: windows must occupy disjoint, increasing time intervals", s));
    previous_end = range->second;
  }
}

QuantumHistory run_history(const TimeStepper& kernel, const EventWavefunction& initial,
                           const std::vector<CompleteMeasurement>& measurements,
                           OrbitVariant variant, std::uint64_t seed) {
  validate_history_windows(measurements);
  std::mt19937_64 gen(seed);
  QuantumHistory history{seed, variant, {}};
  EventWavefunction event = initial;
  for (std::size_t s = 0; s < measurements.size(); ++s) {
    const auto& m = measurements[s];
    const Orbit orbit = variant == OrbitVariant::retarded
                            ? make_retarded_orbit_until(kernel, event, m.window.time_range()->second)
                            : make_orbit(kernel, event, variant);
    std::vector<OutcomeProbability> dist;
    try {
      dist = outcome_probabilities(m, orbit.psi);
    } catch (const ImproperWindowError& e) {
      throw ImproperWindowError(fmt::format("history stage {}: {}", s, e.what()));
    }
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    std::size_t chosen = dist.size();
    double cumulative = 0;
    for (std::size_t a = 0; a < dist.size(); ++a) {
      cumulative += dist[a].probability;
      if (u < cumulative && dist[a].probability > 0) {
        chosen = a;
        break;
      }
    }
    if (chosen == dist.size()) {
      for (std::size_t a = dist.size(); a-- > 0;)
        if (dist[a].probability > 0) {
          chosen = a;
          break;
        }
    }
    EventWavefunction outcome = collapse(m, orbit.psi, chosen);
    history.stages.push_back(
        {m.window, chosen, dist[chosen].label, dist[chosen].probability, dist, outcome});
    event = std::move(outcome);
  }
  return history;
}

}  // namespace qet
