#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hforge/pipeline.hpp"
#include "hforge/report.hpp"
#include "hforge/scenario.hpp"

namespace hforge {

/// Command names accepted by run_commands, in canonical order.
const std::vector<std::string>& command_names();

/// Commands used when a scenario lists none.
std::vector<std::string> default_commands(const Scenario& s);

struct CommandOptions {
  /// Inflation constant for the inflate command; unset falls back to the scenario value.
  std::optional<double> inflate_c;
};

/// Report plus the files of an output directory, keyed by relative path. Contents are
/// deterministic for a given scenario and seed.
struct RunOutput {
  VerificationReport report;
  std::map<std::string, std::string> files;
};

/// Runs the commands in order against one scenario. Results shared between commands (initial
/// form, correction, trace) are computed once. Expected-failure keys from the scenario are applied
/// before report.csv, report.json and summary.txt are rendered.
RunOutput run_commands(const Scenario& s, const std::vector<std::string>& commands,
                       const CommandOptions& options = {});

/// Writes every file of `out` below `dir`, creating directories as needed.
void write_output(const RunOutput& out, const std::string& dir);

}  // namespace hforge
