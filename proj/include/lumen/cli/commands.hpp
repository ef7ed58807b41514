#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lumen::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// Entry point of the `lumen` binary. Messages go to `out` / `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

/// The config-key listing appended to every command's --help.
std::string config_help();

}  // namespace lumen::cli
