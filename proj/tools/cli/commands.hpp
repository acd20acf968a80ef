#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace gapx::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3, kUnsupported = 4 };

/// Each command writes its files into out_dir (created if missing) and
/// returns their paths.
std::vector<std::filesystem::path> cmd_estimate(const RunConfig& cfg, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_oracle_check(const RunConfig& cfg,
                                                    const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_minimax(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Dispatches by subcommand name and maps failures to exit codes, writing
/// the error text to err.
int run_command(const std::string& name, const RunConfig& cfg, const std::filesystem::path& out_dir,
                std::ostream& err);

}  // namespace gapx::cli
