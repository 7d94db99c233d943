#include "qet/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fft.hpp"

namespace qet {

std::string to_string(DerivativeScheme scheme) {
  return scheme == DerivativeScheme::spectral ? "spectral" : "finite_difference";
}

DerivativeScheme derivative_scheme_from_string(const std::string& name) {
  if (name == "spectral") return DerivativeScheme::spectral;
  if (name == "finite_difference") return DerivativeScheme::finite_difference;
  throw std::invalid_argument("unknown derivative scheme '" + name + "'");
}

Potential::Potential(Function fn, bool time_dependent, std::string description)
    : fn_(std::move(fn)), time_dependent_(time_dependent), description_(std::move(description)) {}

Potential Potential::zero() { return {}; }

Potential Potential::harmonic(double mass, double omega, double centre) {
  const double k = mass * omega * omega;
  return {[k, centre](double, double x) { return 0.5 * k * (x - centre) * (x - centre); }, false,
          fmt::format("harmonic(mass={}, omega={}, centre={})", mass, omega, centre)};
}

Potential Potential::gaussian(double amplitude, double centre, double width) {
  return {[=](double, double x) {
            const double u = (x - centre) / width;
            return amplitude * std::exp(-0.5 * u * u);
          },
          false, fmt::format("gaussian(amplitude={}, centre={}, width={})", amplitude, centre, width)};
}

Potential Potential::driven_harmonic(double mass, double omega, double force, double drive) {
  const double k = mass * omega * omega;
  return {[=](double t, double x) { return 0.5 * k * x * x - force * std::sin(drive * t) * x; },
          true,
          fmt::format("driven_harmonic(mass={}, omega={}, force={}, drive={})", mass, omega, force,
                      drive)};
}

void Potential::sample(const SpacetimeGrid& grid, double t, std::span<double> out) const {
  for (std::size_t j = 0; j < grid.n_x(); ++j) out[j] = (*this)(t, grid.x(j));
}

Potential Potential::scaled(double factor) const {
  if (!fn_) return {};
  auto fn = fn_;
  return {[fn, factor](double t, double x) { return factor * fn(t, x); }, time_dependent_,
          fmt::format("{} * {}", factor, description_)};
}

OperatorSpec OperatorSpec::identity() { return {}; }

OperatorSpec OperatorSpec::time() {
  OperatorSpec op;
  op.kind = OperatorKind::time;
  return op;
}

OperatorSpec OperatorSpec::position() {
  OperatorSpec op;
  op.kind = OperatorKind::position;
  return op;
}

OperatorSpec OperatorSpec::energy(DerivativeScheme scheme) {
  OperatorSpec op;
  op.kind = OperatorKind::energy;
  op.scheme = scheme;
  return op;
}

OperatorSpec OperatorSpec::momentum(DerivativeScheme scheme) {
  OperatorSpec op;
  op.kind = OperatorKind::momentum;
  op.scheme = scheme;
  return op;
}

OperatorSpec OperatorSpec::hamiltonian_op(HamiltonianSpec h, DerivativeScheme scheme) {
  OperatorSpec op;
  op.kind = OperatorKind::hamiltonian;
  op.scheme = scheme;
  op.hamiltonian = std::move(h);
  return op;
}

OperatorSpec OperatorSpec::multiplicative(Potential f) {
  OperatorSpec op;
  op.kind = OperatorKind::multiplicative;
  op.multiplier = std::move(f);
  return op;
}

OperatorSpec OperatorSpec::projector(std::shared_ptr<const Projector> p) {
  if (!p) throw std::invalid_argument("OperatorSpec::projector: null projector");
  OperatorSpec op;
  op.kind = OperatorKind::projector;
  op.proj = std::move(p);
  return op;
}

std::string OperatorSpec::describe() const {
  switch (kind) {
    case OperatorKind::identity: return "identity";
    case OperatorKind::time: return "time";
    case OperatorKind::position: return "position";
    case OperatorKind::energy: return "energy[" + to_string(scheme) + "]";
    case OperatorKind::momentum: return "momentum[" + to_string(scheme) + "]";
    case OperatorKind::hamiltonian:
      return fmt::format("hamiltonian[{}](mass={}, V={})", to_string(scheme), hamiltonian.mass,
                         hamiltonian.potential.description());
    case OperatorKind::multiplicative: return "multiplicative(" + multiplier.description() + ")";
    case OperatorKind::projector: return "projector(" + proj->describe() + ")";
  }
  return "unknown";
}

namespace {

// Spectral multiplier k ↦ i·(2π/L)·folded(k); the Nyquist mode is dropped so
// the first derivative of a real sequence stays real.
void spectral_first_derivative(std::span<cplx> data, double length) {
  const std::size_t n = data.size();
  detail::dft(data, -1);
  const double base = 2.0 * std::numbers::pi / length;
  for (std::size_t k = 0; k < n; ++k) {
    const bool nyquist = (n % 2 == 0) && (2 * k == n);
    data[k] *= nyquist ? cplx{} : cplx{0.0, base * static_cast<double>(folded_index(k, n))};
  }
  detail::dft(data, +1);
  for (auto& v : data) v /= static_cast<double>(n);
}

}  // namespace

void first_derivative_x(std::span<const cplx> in, std::span<cplx> out, double dx,
                        DerivativeScheme scheme) {
  const std::size_t n = in.size();
  if (scheme == DerivativeScheme::spectral) {
    std::copy(in.begin(), in.end(), out.begin());
    spectral_first_derivative(out, dx * static_cast<double>(n));
    return;
  }
  const double c = 1.0 / (2.0 * dx);
  for (std::size_t j = 0; j < n; ++j) out[j] = (in[(j + 1) % n] - in[(j + n - 1) % n]) * c;
}

void laplacian_x(std::span<const cplx> in, std::span<cplx> out, double dx,
                 DerivativeScheme scheme) {
  const std::size_t n = in.size();
  if (scheme == DerivativeScheme::spectral) {
    std::copy(in.begin(), in.end(), out.begin());
    detail::dft(out, -1);
    const double base = 2.0 * std::numbers::pi / (dx * static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const double kk = base * static_cast<double>(folded_index(k, n));
      out[k] *= -kk * kk / static_cast<double>(n);
    }
    detail::dft(out, +1);
    return;
  }
  const double c = 1.0 / (dx * dx);
  for (std::size_t j = 0; j < n; ++j)
    out[j] = (in[(j + 1) % n] - 2.0 * in[j] + in[(j + n - 1) % n]) * c;
}

void apply_hamiltonian_slice(const HamiltonianSpec& h, const SpacetimeGrid& grid, double t,
                             DerivativeScheme scheme, std::span<const cplx> in,
                             std::span<cplx> out) {
  laplacian_x(in, out, grid.dx(), scheme);
  const double kinetic = -grid.hbar() * grid.hbar() / (2.0 * h.mass);
  for (std::size_t j = 0; j < in.size(); ++j)
    out[j] = kinetic * out[j] + h.potential(t, grid.x(j)) * in[j];
}

ComplexField time_derivative(const ComplexField& psi, DerivativeScheme scheme) {
  const auto& g = psi.grid();
  const std::size_t n_t = g.n_t(), n_x = g.n_x();
  ComplexField out(g);
  if (scheme == DerivativeScheme::spectral) {
    std::vector<cplx> data(psi.values().begin(), psi.values().end());
    detail::dft_cols(data, n_t, n_x, -1);
    const double base = 2.0 * std::numbers::pi / (g.dt() * static_cast<double>(n_t));
    for (std::size_t a = 0; a < n_t; ++a) {
      const bool nyquist = (n_t % 2 == 0) && (2 * a == n_t);
      const cplx factor =
          nyquist ? cplx{} : cplx{0.0, base * static_cast<double>(folded_index(a, n_t)) /
                                           static_cast<double>(n_t)};
      for (std::size_t j = 0; j < n_x; ++j) data[a * n_x + j] *= factor;
    }
    detail::dft_cols(data, n_t, n_x, +1);
    return ComplexField(g, std::move(data));
  }
  const double dt = g.dt();
  for (std::size_t i = 0; i < n_t; ++i) {
    for (std::size_t j = 0; j < n_x; ++j) {
      cplx d;
      if (n_t < 3) {
        d = (psi(1, j) - psi(0, j)) / dt;
      } else if (i == 0) {
        d = (-3.0 * psi(0, j) + 4.0 * psi(1, j) - psi(2, j)) / (2.0 * dt);
      } else if (i == n_t - 1) {
        d = (3.0 * psi(i, j) - 4.0 * psi(i - 1, j) + psi(i - 2, j)) / (2.0 * dt);
      } else {
        d = (psi(i + 1, j) - psi(i - 1, j)) / (2.0 * dt);
      }
      out(i, j) = d;
    }
  }
  return out;
}

ComplexField apply(const OperatorSpec& op, const ComplexField& psi) {
  const auto& g = psi.grid();
  const std::size_t n_t = g.n_t(), n_x = g.n_x();
  const double hbar = g.hbar();
  ComplexField out(g);
  switch (op.kind) {
    case OperatorKind::identity:
      std::copy(psi.values().begin(), psi.values().end(), out.values().begin());
      break;
    case OperatorKind::time:
      for (std::size_t i = 0; i < n_t; ++i)
        for (std::size_t j = 0; j < n_x; ++j) out(i, j) = g.t(i) * psi(i, j);
      break;
    case OperatorKind::position:
      for (std::size_t i = 0; i < n_t; ++i)
        for (std::size_t j = 0; j < n_x; ++j) out(i, j) = g.x(j) * psi(i, j);
      break;
    case OperatorKind::multiplicative:
      for (std::size_t i = 0; i < n_t; ++i)
        for (std::size_t j = 0; j < n_x; ++j) out(i, j) = op.multiplier(g.t(i), g.x(j)) * psi(i, j);
      break;
    case OperatorKind::energy: {
      out = time_derivative(psi, op.scheme);
      const cplx factor{0.0, hbar};
      for (auto& v : out.values()) v *= factor;
      break;
    }
    case OperatorKind::momentum: {
      const cplx factor{0.0, -hbar};
      for (std::size_t i = 0; i < n_t; ++i) {
        first_derivative_x(psi.slice(i), out.slice(i), g.dx(), op.scheme);
        for (auto& v : out.slice(i)) v *= factor;
      }
      break;
    }
    case OperatorKind::hamiltonian:
      for (std::size_t i = 0; i < n_t; ++i)
        apply_hamiltonian_slice(op.hamiltonian, g, g.t(i), op.scheme, psi.slice(i), out.slice(i));
      break;
    case OperatorKind::projector:
      for (std::size_t i = 0; i < n_t; ++i) op.proj->apply(g, i, psi.slice(i), out.slice(i));
      break;
  }
  return out;
}

namespace {
std::vector<double> density_of(const ComplexField& psi, const ComplexField& a_psi) {
  std::vector<double> d(psi.values().size());
  const auto p = psi.values();
  const auto a = a_psi.values();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = std::real(std::conj(p[k]) * a[k]);
  return d;
}
}  // namespace

std::vector<double> operator_density(const OperatorSpec& op, const ComplexField& psi) {
  return density_of(psi, apply(op, psi));
}

std::vector<double> marginal_densities(const OperatorSpec& op, const ComplexField& psi) {
  const auto& g = psi.grid();
  const auto d = operator_density(op, psi);
  std::vector<double> m(g.n_t());
  for (std::size_t i = 0; i < g.n_t(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < g.n_x(); ++j) s += d[i * g.n_x() + j];
    m[i] = s * g.dx();
  }
  return m;
}

double marginal_density(const OperatorSpec& op, const ComplexField& psi, std::size_t t_index) {
  if (t_index >= psi.grid().n_t()) throw std::invalid_argument("marginal_density: bad time index");
  return marginal_densities(op, psi)[t_index];
}

std::vector<double> current_density(const ComplexField& psi, double mass,
                                    DerivativeScheme scheme) {
  const auto& g = psi.grid();
  std::vector<double> j(g.size());
  std::vector<cplx> deriv(g.n_x());
  const double c = g.hbar() / mass;
  for (std::size_t i = 0; i < g.n_t(); ++i) {
    const auto s = psi.slice(i);
    first_derivative_x(s, deriv, g.dx(), scheme);
    for (std::size_t k = 0; k < g.n_x(); ++k)
      j[i * g.n_x() + k] = c * std::imag(std::conj(s[k]) * deriv[k]);
  }
  return j;
}

std::vector<double> continuity_residual(const ComplexField& psi, const HamiltonianSpec& h,
                                        DerivativeScheme scheme) {
  const auto& g = psi.grid();
  const std::size_t n_t = g.n_t(), n_x = g.n_x();
  const auto j = current_density(psi, h.mass, scheme);

  // ∂ρ/∂t through the same stencils as time_derivative, applied to a real field.
  std::vector<cplx> rho(g.size());
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = std::norm(psi.values()[k]);
  const auto drho = time_derivative(ComplexField(g, std::move(rho)), DerivativeScheme::finite_difference);

  std::vector<double> residual(g.size());
  std::vector<cplx> jrow(n_x), djrow(n_x);
  for (std::size_t i = 0; i < n_t; ++i) {
    for (std::size_t k = 0; k < n_x; ++k) jrow[k] = j[i * n_x + k];
    first_derivative_x(jrow, djrow, g.dx(), scheme);
    for (std::size_t k = 0; k < n_x; ++k)
      residual[i * n_x + k] = std::real(drho(i, k)) + std::real(djrow[k]);
  }
  return residual;
}

double uncertainty(const OperatorSpec& op, const ComplexField& psi,
                   const ObservationWindow& window) {
  if (!(window.grid() == psi.grid())) throw std::invalid_argument("uncertainty: grid mismatch");
  std::vector<double> rho(psi.values().size());
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = std::norm(psi.values()[k]);
  const double W = window.integrate(rho);
  if (!(W > 0) || !std::isfinite(W))
    throw QetError(fmt::format("uncertainty: improper window (W = {})", W));

  const ComplexField a_psi = apply(op, psi);
  const double mean = window.integrate(density_of(psi, a_psi)) / W;

  // (Â - a)ψ, then (Â - a)² ψ
  ComplexField centred(psi.grid());
  for (std::size_t k = 0; k < rho.size(); ++k)
    centred.values()[k] = a_psi.values()[k] - mean * psi.values()[k];
  ComplexField second = apply(op, centred);
  for (std::size_t k = 0; k < rho.size(); ++k) second.values()[k] -= mean * centred.values()[k];

  const double variance = window.integrate(density_of(psi, second)) / W;
  if (variance < -1e-10)
    throw QetError(fmt::format("uncertainty: negative variance {:.3e} for {}", variance,
                               op.describe()));
  return std::sqrt(std::max(variance, 0.0));
}

double max_abs(std::span<const double> values) {
  double m = 0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace qet
