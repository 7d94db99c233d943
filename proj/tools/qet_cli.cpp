// qet: batch driver for event-wavefunction runs.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qet/checks.hpp"
#include "qet/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Event-wavefunction lattice driver"};
  app.require_subcommand(1);

  std::string run_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto* run = app.add_subcommand("run", "Validate and run a JSON config");
  run->add_option("config", run_path, "Config file")->required();
  auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  auto* seed_opt = run->add_option("--seed", seed, "Random seed (overrides seed)");
  run->add_option("--threads", threads, "Recorded in the manifest; runs are sequential")
      ->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Report config diagnostics without running");
  validate->add_option("config", validate_path, "Config file")->required();

  std::string suite;
  auto* check = app.add_subcommand("check", "Run the invariant suites");
  auto* suite_opt = check->add_option("--suite", suite, "Suite name (default: all)");
  suite_opt->check(CLI::IsMember([] {
    auto names = qet::check_suite_names();
    names.push_back("all");
    return names;
  }()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? qet::exit_ok : qet::exit_parse_error;
  }

  try {
    if (*run) {
      qet::RunOptions options;
      if (*out_opt) options.out_dir = out_dir;
      if (*seed_opt) options.seed = seed;
      options.threads = threads;
      return qet::run_config_file(run_path, options, std::cout, std::cerr);
    }
    if (*validate) return qet::validate_config_file(validate_path, std::cout, std::cerr);
    return qet::run_check_command(*suite_opt ? std::optional<std::string>(suite) : std::nullopt,
                                  std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qet::exit_failure;
  }
}
