#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tdlab/config.hpp"

namespace tdlab {

/// Process exit statuses of the command line tool.
enum ExitStatus : int {
  kExitPass = 0,
  kExitVerdictFailed = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

std::string tool_version();

/// Runs one configuration and writes report.json, series.csv and summary.txt
/// into out_dir (created if needed). Errors are reported on stderr and mapped
/// to the exit statuses above.
int run_config_file(const std::string& path, const std::optional<std::string>& out_dir,
                    std::optional<std::uint64_t> seed, bool quiet = false);

/// Runs every *.json under a directory, `jobs` at a time, each into
/// <out>/<stem>/. Returns the worst exit status.
int run_directory(const std::string& dir, const std::optional<std::string>& out_dir,
                  std::optional<std::uint64_t> seed, int jobs);

int validate_config_file(const std::string& path);

/// Entry point of the `tdlab` executable.
int cli_main(int argc, char** argv);

}  // namespace tdlab
