// Scenario configuration: JSON parsing, validation with config-path
// diagnostics, default resolution, and construction of the numeric objects.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qet/lattice.hpp"
#include "qet/measurement.hpp"
#include "qet/observables.hpp"
#include "qet/perturbation.hpp"
#include "qet/propagator.hpp"
#include "qet/window.hpp"

namespace qet {

using json = nlohmann::ordered_json;

class ConfigParseError : public QetError {
 public:
  using QetError::QetError;
};

struct Diagnostic {
  std::string path;  ///< e.g. "history.stages[1].window"
  std::string message;

  std::string str() const { return path.empty() ? message : path + ": " + message; }
};

/// Throws ConfigParseError on malformed JSON or a non-object document.
json parse_config(const std::string& text);
json load_config(const std::filesystem::path& path);

struct ResolvedConfig {
  json config;  ///< complete config with every default filled in
  std::vector<Diagnostic> diagnostics;

  bool valid() const { return diagnostics.empty(); }
};

/// Fills defaults and validates. Unknown keys, wrong types, out-of-range
/// values and semantic problems (overlapping history windows, Gaussian
/// envelopes leaking off the grid, …) become diagnostics. `base_dir` resolves
/// relative event file paths.
ResolvedConfig resolve_config(const json& user, const std::filesystem::path& base_dir = {});
std::vector<Diagnostic> validate_config(const json& user,
                                        const std::filesystem::path& base_dir = {});

// Builders over a resolved config.
SpacetimeGrid build_grid(const json& config);
HamiltonianSpec build_hamiltonian(const json& config);
Potential build_potential(const json& potential, double mass);
Integrator build_integrator(const json& config);
DerivativeScheme build_scheme(const json& config);
EventWavefunction build_event(const json& config, const SpacetimeGrid& grid,
                              const std::filesystem::path& base_dir = {});
ObservationWindow build_window(const json& window, const SpacetimeGrid& grid);
std::vector<Outcome> build_partition(const json& partition, const SpacetimeGrid& grid,
                                     const HamiltonianSpec& h);
OperatorSpec build_operator(const std::string& name, const HamiltonianSpec& h,
                            DerivativeScheme scheme);
DiscreteContinuumModel build_continuum_model(const json& config);
ScatteringSetup build_scattering(const json& config);

/// Names accepted in measure.operators.
const std::vector<std::string>& operator_names();

}  // namespace qet
