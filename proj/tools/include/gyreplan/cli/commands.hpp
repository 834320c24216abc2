#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>

#include "gyreplan/cli/run_config.hpp"

namespace gyreplan::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

/// Writes ftle_forward.csv and ftle_backward.csv.
int cmd_ftle(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Writes trajectory.csv and prints a one-line summary. A failed solve keeps
/// the partial trajectory on disk and returns exit_failure.
int cmd_plan(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Writes sweep.csv. Rows already present in an existing sweep.csv are kept
/// and not recomputed.
int cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

struct AnalyzeOptions {
    std::filesystem::path input;
    std::set<std::string> analyses{"spectrum", "histogram", "orbit", "correlation"};
};

int cmd_analyze(const RunConfig& cfg, const AnalyzeOptions& options, const std::filesystem::path& out_dir,
                std::ostream& log);

/// Full command-line front end; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace gyreplan::cli
