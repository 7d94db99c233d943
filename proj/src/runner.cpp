#include "qet/runner.hpp"

#include <map>
#include <ostream>

#include <fmt/format.h>

#include "qet/checks.hpp"
#include "qet/io.hpp"

namespace qet {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

Report check_report(const std::vector<CheckResult>& results, bool& all_passed) {
  Report r;
  all_passed = true;
  std::string current;
  std::size_t passed = 0;
  for (const auto& c : results) {
    if (c.suite != current) {
      r.section("suite " + c.suite);
      current = c.suite;
    }
    r.add(c.name, fmt::format("{} (value {:.6g}, required {})", c.passed ? "pass" : "FAIL",
                              c.value, c.criterion));
    all_passed = all_passed && c.passed;
    passed += c.passed;
  }
  r.section("summary");
  r.add("checks", results.size());
  r.add("passed", passed);
  r.add("status", all_passed ? "all invariant suites passed" : "invariant failure");
  return r;
}

Report manifest_text(const json& config, const RunOptions& options) {
  Report m;
  m.section("run");
  m.add("version", kVersion);
  m.add("task", config["task"].get<std::string>());
  m.add("seed", static_cast<long long>(config["seed"].get<std::uint64_t>()));
  m.add("threads", static_cast<long long>(options.threads));
  m.add("integrator", config["integrator"].get<std::string>());
  m.add("derivative_scheme", config["derivative_scheme"].get<std::string>());
  m.add("theta_convention", "theta(0) = 1; the coincident slice belongs to the retarded part");
  m.add("omega_p", "p^2 / (2 m hbar)");
  m.add("golden_rule_weights", "hbar * rho(omega) * d_omega");
  m.add("rng", "mt19937_64, u = (draw >> 11) * 2^-53");
  m.section("config");
  m.add("resolved", config.dump());
  return m;
}

struct Context {
  json config;
  fs::path base_dir;
  fs::path out_dir;
  std::ostream& out;
};

SpacetimeGrid grid_of(const Context& c) { return build_grid(c.config); }

int task_orbit(Context& c) {
  const auto g = grid_of(c);
  const auto h = build_hamiltonian(c.config);
  const EvolutionKernel kernel(g, h, build_integrator(c.config));
  const auto event = build_event(c.config, g, c.base_dir);
  const auto variant = orbit_variant_from_string(c.config["orbit"]["variant"]);
  const Orbit orbit = make_orbit(kernel, event, variant);
  const auto scheme = build_scheme(c.config);

  write_event(c.out_dir / "event.csv", event);
  if (c.config["orbit"]["write_orbit"].get<bool>()) write_orbit(c.out_dir / "orbit.csv", orbit.psi);
  if (c.config["orbit"]["write_density"].get<bool>())
    write_density(c.out_dir / "density.csv", g, operator_density(OperatorSpec::identity(), orbit.psi));
  write_marginal(c.out_dir / "marginal.csv", g, particle_marginal(orbit.psi));

  Report r;
  r.section("orbit");
  r.add("variant", to_string(variant));
  r.add("kernel", kernel.describe());
  r.section("event");
  r.add("kind", c.config["event"]["kind"].get<std::string>());
  r.add("improper", event.improper());
  r.add("norm", event.norm());
  r.section("diagnostics");
  const double tol = c.config["orbit"]["charge_tolerance"];
  bool ok = true;
  try {
    const auto charge = conserved_charge(orbit);
    r.add("N", charge.charge);
    r.add("max_rho_deviation", charge.max_relative_deviation);
    r.add("charge_tolerance", tol);
    ok = charge.max_relative_deviation <= tol;
    r.add("charge_conserved", ok);
  } catch (const QetError& e) {
    r.add("N", std::string("unavailable (") + e.what() + ")");
  }
  r.add("schrodinger_residual", schrodinger_residual(orbit.psi, h, scheme));
  write_text(c.out_dir / "report.txt", r.str());
  c.out << r.str();
  if (!ok) throw QetError("rho(t) deviates from N beyond orbit.charge_tolerance");
  return exit_ok;
}

int task_measure(Context& c) {
  const auto g = grid_of(c);
  const auto h = build_hamiltonian(c.config);
  const EvolutionKernel kernel(g, h, build_integrator(c.config));
  const auto event = build_event(c.config, g, c.base_dir);
  const auto& m = c.config["measure"];
  const auto variant = orbit_variant_from_string(m["variant"]);
  const Orbit orbit = make_orbit(kernel, event, variant);
  const auto scheme = build_scheme(c.config);
  const CompleteMeasurement measurement{build_partition(m["partition"], g, h),
                                        build_window(m["window"], g)};
  validate_partition(measurement.outcomes, g);

  Report r;
  r.section("window");
  r.add("boxes", measurement.window.describe());
  r.add("W", window_weight(orbit.psi, measurement.window));
  r.add("variant", to_string(variant));
  r.section("expectation");
  for (const auto& name : m["operators"])
    r.add(name.get<std::string>(),
          expectation(build_operator(name, h, scheme), orbit.psi, measurement.window));
  r.section("uncertainty");
  for (const auto& name : m["operators"])
    r.add(name.get<std::string>(),
          uncertainty(build_operator(name, h, scheme), orbit.psi, measurement.window));
  r.section("probabilities");
  const auto probs = outcome_probabilities(measurement, orbit.psi);
  for (std::size_t a = 0; a < probs.size(); ++a)
    r.add(fmt::format("{} ({})", probs[a].label, measurement.outcomes[a].projector->describe()),
          probs[a].probability);
  if (!m["collapse"].is_null()) {
    const auto label = m["collapse"].get<std::string>();
    for (std::size_t a = 0; a < probs.size(); ++a) {
      if (probs[a].label != label) continue;
      const auto outcome = collapse(measurement, orbit.psi, a);
      write_event(c.out_dir / "outcome.csv", outcome);
      r.section("collapse");
      r.add("label", label);
      r.add("norm", outcome.norm());
    }
  }
  write_text(c.out_dir / "report.txt", r.str());
  c.out << r.str();
  return exit_ok;
}

int task_history(Context& c) {
  const auto g = grid_of(c);
  const auto h = build_hamiltonian(c.config);
  const EvolutionKernel kernel(g, h, build_integrator(c.config));
  const auto event = build_event(c.config, g, c.base_dir);
  const auto& hs = c.config["history"];
  std::vector<CompleteMeasurement> stages;
  for (const auto& s : hs["stages"]) {
    stages.push_back({build_partition(s["partition"], g, h), build_window(s["window"], g)});
    validate_partition(stages.back().outcomes, g);
  }
  const auto variant = orbit_variant_from_string(hs["variant"]);
  const std::uint64_t seed = c.config["seed"];
  const auto history = run_history(kernel, event, stages, variant, seed);

  Report r;
  r.section("history");
  r.add("seed", static_cast<long long>(seed));
  r.add("variant", to_string(variant));
  r.add("stages", history.stages.size());
  for (std::size_t i = 0; i < history.stages.size(); ++i) {
    const auto& s = history.stages[i];
    const std::string file = fmt::format("stage_{}.csv", i);
    write_event(c.out_dir / file, s.outcome);
    r.section(fmt::format("stage {}", i));
    r.add("window", s.window.describe());
    r.add("label", s.label);
    r.add("probability", s.probability);
    std::string dist;
    for (const auto& d : s.distribution)
      dist += fmt::format("{}{}={:.17g}", dist.empty() ? "" : ", ", d.label, d.probability);
    r.add("distribution", dist);
    r.add("outcome", file);
  }
  write_text(c.out_dir / "history.txt", r.str());
  c.out << r.str();
  return exit_ok;
}

int task_golden_rule(Context& c) {
  const auto& gr = c.config["golden_rule"];
  const auto model = build_continuum_model(c.config);
  const auto rate = golden_rule_rate(model, 0);

  {
    std::string csv = "omega,gamma\n";
    for (std::size_t j = 0; j < model.omega.size(); ++j)
      csv += format_number(model.omega[j]) + ',' + format_number(rate.resolved[j]) + '\n';
    write_text(c.out_dir / "golden_rule_resolved.csv", csv);
  }
  Report r;
  r.section("model");
  r.add("hbar", model.hbar);
  r.add("level_omega", model.levels[0]);
  r.add("band", fmt::format("[{:.17g}, {:.17g}]", gr["band"][0].get<double>(),
                            gr["band"][1].get<double>()));
  r.add("n_omega", model.omega.size());
  r.add("density", gr["density"].get<double>());
  r.add("coupling", gr["coupling"].get<double>());
  r.section("golden_rule");
  r.add("Gamma_formula", rate.gamma);
  if (gr["fit"].get<bool>() && rate.gamma > 0) {
    const auto cmp = compare_golden_rule(model, 0, gr["samples"].get<std::size_t>());
    r.add("Gamma_fit", cmp.gamma_fit);
    r.add("relative_error", cmp.relative_error);
    r.add("fit_t_begin", cmp.t_begin);
    r.add("fit_t_end", cmp.t_end);
  }
  if (rate.gamma > 0) {
    const auto regime =
        golden_rule_regime(model, 0, gr["regime_horizons"].get<std::vector<double>>());
    r.section("regime");
    r.add("Gamma_linear_growth", regime.gamma_linear);
    r.add("relative_error", regime.relative_error);
    r.add("Gamma_T_max", regime.gamma_t_max);
    r.add("bandwidth_T_min", regime.bandwidth_t_min);
  }
  write_text(c.out_dir / "report.txt", r.str());
  c.out << r.str();
  return exit_ok;
}

int task_scatter(Context& c) {
  const auto& sc = c.config["scatter"];
  const auto setup = build_scattering(c.config);
  const bool with_exact = sc["exact"].get<bool>();
  std::map<long, std::vector<cplx>> columns;
  std::vector<SMatrixRow> rows;
  Report on, off;
  on.section("on_shell");
  off.section("off_shell");
  for (const auto& pair : sc["modes"]) {
    const long k = pair[0].get<long>(), kp = pair[1].get<long>();
    const double p = static_cast<double>(k) * setup.dp();
    const double pp = static_cast<double>(kp) * setup.dp();
    const auto born = born_smatrix(setup, p, pp);
    cplx exact{std::nan(""), std::nan("")};
    if (with_exact) {
      if (!columns.count(kp)) columns[kp] = exact_smatrix_column(setup, pp);
      exact = columns[kp][setup.momentum_index(p)];
    }
    rows.push_back({p, pp, born.value, exact});
    Report& target = born.on_shell ? on : off;
    const std::string key = fmt::format("S({},{})", k, kp);
    target.add(key + " born", fmt::format("{:.17g} {:+.17g}i", born.value.real(), born.value.imag()));
    if (with_exact) {
      target.add(key + " exact", fmt::format("{:.17g} {:+.17g}i", exact.real(), exact.imag()));
      target.add(key + " |born-exact|", std::abs(born.value - exact));
    }
  }
  write_smatrix(c.out_dir / "smatrix.csv", rows);
  Report r;
  r.section("scatter");
  r.add("omega_p", "p^2 / (2 m hbar)");
  r.add("phase", "exp(-i (omega_p + omega_p') T / 2)");
  r.add("potential", setup.potential.description());
  r.add("horizon", setup.horizon);
  r.add("n_steps", setup.n_steps);
  r.add("dp", setup.dp());
  const std::string text = r.str() + "\n" + on.str() + "\n" + off.str();
  write_text(c.out_dir / "report.txt", text);
  c.out << text;
  return exit_ok;
}

int task_check(Context& c) {
  const auto results = run_checks(c.config["check"]["suites"].get<std::vector<std::string>>());
  bool ok = false;
  const auto r = check_report(results, ok);
  write_text(c.out_dir / "report.txt", r.str());
  c.out << r.str();
  return ok ? exit_ok : exit_check_failure;
}

}  // namespace

int run_config(const json& user_in, const fs::path& base_dir, const RunOptions& options,
               std::ostream& out, std::ostream& err) {
  json user = user_in;
  if (options.seed) user["seed"] = *options.seed;
  if (options.out_dir) user["output"]["dir"] = options.out_dir->string();
  auto resolved = resolve_config(user, base_dir);
  if (!resolved.valid()) {
    for (const auto& d : resolved.diagnostics) err << "error: " << d.str() << '\n';
    return exit_validation_error;
  }
  const json& config = resolved.config;
  Context c{config, base_dir, fs::path(config["output"]["dir"].get<std::string>()), out};
  try {
    fs::create_directories(c.out_dir);
    write_text(c.out_dir / "manifest.json", config.dump(2) + "\n");
    write_text(c.out_dir / "manifest.txt", manifest_text(config, options).str());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
  const std::string task = config["task"];
  try {
    if (task == "orbit") return task_orbit(c);
    if (task == "measure") return task_measure(c);
    if (task == "history") return task_history(c);
    if (task == "golden_rule") return task_golden_rule(c);
    if (task == "scatter") return task_scatter(c);
    return task_check(c);
  } catch (const std::exception& e) {
    err << "error: task '" << task << "' failed: " << e.what() << '\n';
    return exit_failure;
  }
}

int run_config_file(const fs::path& config, const RunOptions& options, std::ostream& out,
                    std::ostream& err) {
  json user;
  try {
    user = load_config(config);
  } catch (const ConfigParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_parse_error;
  }
  return run_config(user, config.parent_path(), options, out, err);
}

int validate_config_file(const fs::path& config, std::ostream& out, std::ostream& err) {
  json user;
  try {
    user = load_config(config);
  } catch (const ConfigParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_parse_error;
  }
  const auto diags = validate_config(user, config.parent_path());
  for (const auto& d : diags) out << d.str() << '\n';
  if (diags.empty()) out << "valid\n";
  return diags.empty() ? exit_ok : exit_validation_error;
}

int run_check_command(const std::optional<std::string>& suite, std::ostream& out,
                      std::ostream& err) {
  std::vector<std::string> suites{suite.value_or("all")};
  std::vector<CheckResult> results;
  try {
    results = run_checks(suites);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation_error;
  }
  bool ok = false;
  out << check_report(results, ok).str();
  return ok ? exit_ok : exit_check_failure;
}

}  // namespace qet
