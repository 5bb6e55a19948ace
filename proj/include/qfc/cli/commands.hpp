#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "qfc/cli/config.hpp"
#include "qfc/cli/report.hpp"

namespace qfc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnv = "QFC_LINK_CONFIG";

// Data that parsed but cannot be evaluated, e.g. an incomplete set of Bell
// expectations: exit code 3.
class IncompleteData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Each builder reads its input files, computes everything in memory and
// returns the files to emit; nothing touches the output directory.
ReportBundle build_efficiency(const RunConfig& cfg);
ReportBundle build_cavity(const RunConfig& cfg);
ReportBundle build_link(const RunConfig& cfg);
ReportBundle build_bell(const RunConfig& cfg, const std::string& mode);
ReportBundle build_g2(const RunConfig& cfg);

struct CommandOptions {
  std::string command;  // efficiency | cavity | link | bell | g2
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
};

// Loads the config, runs the command and writes the bundle. Diagnostics go
// to `err`, a one-line summary per written file to `out`. Returns the exit
// code.
int run_command(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace qfc::cli
