#pragma once

// Subcommands of the pesin tool. Each writes CSV tables, SVG figures and a
// JSON summary into the output directory and returns a RunReport.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pesin/cli/config.hpp"
#include "pesin/cli/output.hpp"

namespace pesin::cli {

enum ExitCode : int { kPass = 0, kUsage = 1, kVerifyFail = 2, kNumericFail = 3 };

int exit_code_for(ErrorKind kind);

struct RunReport {
  std::string command;
  std::string config_hash;
  Json summary;           // deterministic part, written to <command>.json
  std::vector<std::string> files;
  bool pass = true;
  int exit_code = kPass;
  double wall_time = 0;   // reported on stdout and in <command>.timing.json only
};

RunReport cmd_spectrum(const ExperimentConfig& config, const std::filesystem::path& out);
RunReport cmd_pesin(const ExperimentConfig& config, const std::filesystem::path& out);
RunReport cmd_manifold(const ExperimentConfig& config, const std::filesystem::path& out);
RunReport cmd_holonomy(const ExperimentConfig& config, const std::filesystem::path& out);
RunReport cmd_verify_act(const ExperimentConfig& config, const std::filesystem::path& out);
/// Collects the JSON summaries found in the output directory.
RunReport cmd_report(const ExperimentConfig& config, const std::filesystem::path& out);

std::vector<std::string> command_names();

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 0;  // 0: TBB default
};

/// Loads the config, applies overrides, runs the command and writes the
/// summary. Errors are reported on `err` and mapped to exit codes.
int run_command(const std::string& command, const RunOptions& options, std::ostream& log, std::ostream& err);

}  // namespace pesin::cli
