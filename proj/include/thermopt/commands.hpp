#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace thermopt {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitNonconvergence = 2,
  kExitCriticality = 3,
  kExitVerifyFailed = 4,
  kExitCertificateInfeasible = 5,
};

inline constexpr int kReportSchemaVersion = 1;

struct CommandOptions {
  std::string command;  ///< solve, optimize, verify, convergence, certificate
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  ///< overrides output.dir
  int levels = 3;
  std::string suite = "gradient";
};

/// Runs one command; returns the process exit code.  Diagnostics go to err.
int run_command(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace thermopt
