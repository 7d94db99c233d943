// Batch driver behind the qet command line: run, validate and check.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "qet/config.hpp"

namespace qet {

enum ExitStatus : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_parse_error = 2,
  exit_validation_error = 3,
  exit_check_failure = 4,
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  ///< overrides output.dir
  std::optional<std::uint64_t> seed;             ///< overrides seed
  unsigned threads = 1;  ///< recorded in the manifest; computations are sequential
};

/// Parses, validates and runs a config file, writing artifacts into the output
/// directory. The manifest is written as soon as validation succeeds.
int run_config_file(const std::filesystem::path& config, const RunOptions& options,
                    std::ostream& out, std::ostream& err);

/// Runs an already parsed config; relative event paths resolve against base_dir.
int run_config(const json& user, const std::filesystem::path& base_dir, const RunOptions& options,
               std::ostream& out, std::ostream& err);

/// Prints diagnostics (one per line); returns exit_ok iff there are none.
int validate_config_file(const std::filesystem::path& config, std::ostream& out,
                         std::ostream& err);

/// Runs the invariant suites (all when suite is empty) and prints a report.
int run_check_command(const std::optional<std::string>& suite, std::ostream& out,
                      std::ostream& err);

}  // namespace qet
