#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace polylab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInconclusive = 2;

struct RunOptions {
  std::string out_dir = ".";
  std::vector<std::string> inputs;  // files read by the run; never overwritten
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::string> artifacts;  // paths written
  std::string summary;                 // short human-readable text
};

/// Subcommands that take a key=value configuration.
const std::vector<std::string>& configured_commands();
std::string describe(const std::string& command);

/// Schema of a subcommand. `raw` matters only where the schema depends on a
/// selector key (disorder: check=...).
Schema schema_for(const std::string& command, const RawConfig& raw);

RunResult run_command(const Config& cfg, const RunOptions& opt);
/// Merges artifacts: validates embedded hashes, pools compatible runs, flags mismatches.
RunResult run_report(const std::vector<std::string>& artifacts, const RunOptions& opt);

}  // namespace polylab::cli
