#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "qet/config.hpp"
#include "qet/io.hpp"
#include "qet/runner.hpp"

using namespace qet;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qet-test-" + name + "-" + std::to_string(std::random_device{}()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool has_diagnostic(const std::vector<Diagnostic>& diags, const std::string& path,
                    const std::string& fragment) {
  for (const auto& d : diags)
    if (d.path == path && d.message.find(fragment) != std::string::npos) return true;
  return false;
}

int run(const json& config, const fs::path& out, std::string* stdout_text = nullptr,
        std::optional<std::uint64_t> seed = std::nullopt) {
  std::ostringstream o, e;
  RunOptions opts;
  opts.out_dir = out;
  opts.seed = seed;
  const int rc = run_config(config, {}, opts, o, e);
  if (stdout_text) *stdout_text = o.str();
  return rc;
}

const json history_config = parse_config(R"({
  "task": "history",
  "grid": {"t_min": 0, "t_max": 4, "n_t": 64, "x_min": -10, "x_max": 10, "n_x": 64},
  "event": {"kind": "sharp", "t": 0, "x0": 0, "sigma_x": 1, "p0": 1},
  "history": {"stages": [
    {"window": {"sharp_t": 1}, "partition": {"kind": "position", "edges": [-1, 1]}},
    {"window": {"t": [2, 2.5]}, "partition": {"kind": "momentum", "edges": [0]}}
  ]}
})");

}  // namespace

TEST_CASE("defaults resolve to a complete, valid config") {
  const auto r = resolve_config(json::object());
  CHECK(r.valid());
  CHECK(r.config["task"] == "check");
  CHECK(r.config["grid"]["n_t"] == 256);
  CHECK(r.config["theta_convention"] == "diagonal_retarded");
}

TEST_CASE("diagnostics name the offending path") {
  auto d = validate_config(parse_config(R"({"grid": {"nx": 10}, "seed": -1})"));
  CHECK(has_diagnostic(d, "grid.nx", "unknown key"));
  CHECK(d.size() >= 2);

  d = validate_config(parse_config(R"({"task": "orbit", "grid": {"x_min": -2, "x_max": 2},
                                       "event": {"kind": "gaussian", "sigma_x": 3}})"));
  CHECK(has_diagnostic(d, "event", "wider than the grid"));

  json overlapping = history_config;
  overlapping["history"]["stages"][1]["window"] = json{{"t", {0.5, 1.5}}};
  d = validate_config(overlapping);
  CHECK(has_diagnostic(d, "history.stages[1].window", "disjoint"));

  d = validate_config(parse_config(R"({"task": "measure", "measure": {"window": {"t": [4.01, 4.02]}}})"));
  CHECK(has_diagnostic(d, "measure.window", "selects no grid nodes"));

  d = validate_config(parse_config(R"({"task": "teleport"})"));
  CHECK(has_diagnostic(d, "task", ""));
  CHECK_THROWS_AS(parse_config("{\"task\": "), ConfigParseError);
}

TEST_CASE("exit codes") {
  const auto dir = scratch_dir("codes");
  write_text(dir / "broken.json", "{ not json");
  std::ostringstream o, e;
  CHECK(run_config_file(dir / "broken.json", {}, o, e) == exit_parse_error);
  CHECK(validate_config_file(dir / "broken.json", o, e) == exit_parse_error);

  const auto out = dir / "invalid-out";
  CHECK(run(parse_config(R"({"grid": {"n_t": 1}})"), out) == exit_validation_error);
  CHECK_FALSE(fs::exists(out));

  CHECK(run(parse_config(R"({"task": "check", "check": {"suites": ["lattice"]}})"), dir / "check") ==
        exit_ok);
  CHECK(run_check_command(std::string("nonsense"), o, e) == exit_validation_error);
  fs::remove_all(dir);
}

TEST_CASE("golden_rule task reports the formula rate") {
  const auto dir = scratch_dir("gr");
  const auto cfg = parse_config(R"({"task": "golden_rule", "golden_rule": {"coupling": 0.1, "n_omega": 512}})");
  REQUIRE(run(cfg, dir) == exit_ok);
  const auto report = read_text(dir / "report.txt");
  CHECK(report.find("Gamma_formula: 0.06283185307") != std::string::npos);
  CHECK(fs::exists(dir / "golden_rule_resolved.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("runs are reproducible from seed and manifest") {
  const auto dir = scratch_dir("repro");
  REQUIRE(run(history_config, dir / "a", nullptr, 9) == exit_ok);
  REQUIRE(run(history_config, dir / "b", nullptr, 9) == exit_ok);
  CHECK(read_text(dir / "a" / "history.txt") == read_text(dir / "b" / "history.txt"));
  CHECK(read_text(dir / "a" / "stage_1.csv") == read_text(dir / "b" / "stage_1.csv"));

  const auto manifest = load_config(dir / "a" / "manifest.json");
  CHECK(manifest["seed"] == 9);
  REQUIRE(run(manifest, dir / "c") == exit_ok);
  CHECK(read_text(dir / "a" / "history.txt") == read_text(dir / "c" / "history.txt"));
  fs::remove_all(dir);
}

TEST_CASE("event files round-trip through csv and sidecar") {
  const auto dir = scratch_dir("event");
  const auto g = make_grid(0, 2, 8, -3, 3, 16, 0.5);
  const auto ev = gaussian_event(g, {1, 0.2, 0, 0.5, 0.1, 0.2});
  write_event(dir / "ev.csv", ev);
  CHECK(fs::exists(sidecar_path(dir / "ev.csv")));
  const auto back = read_event(dir / "ev.csv");
  CHECK(back.grid() == g);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(back.values()[k] == ev.values()[k]);

  json cfg = parse_config(R"({"task": "orbit", "event": {"kind": "file", "path": "ev.csv"},
    "grid": {"t_min": 0, "t_max": 2, "n_t": 8, "x_min": -3, "x_max": 3, "n_x": 16, "hbar": 0.5}})");
  CHECK(validate_config(cfg, dir).empty());
  cfg["grid"]["n_x"] = 32;
  CHECK_FALSE(validate_config(cfg, dir).empty());
  fs::remove_all(dir);
}

TEST_CASE("report formatting") {
  Report r;
  r.section("a");
  r.add("x", 0.1);
  r.add("flag", true);
  CHECK(r.str() == "[a]\nx: 0.10000000000000001\nflag: true\n");
  CHECK(r.find("a", "flag") == "true");
}
