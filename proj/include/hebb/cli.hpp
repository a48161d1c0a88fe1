#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "hebb/evaluation.hpp"

namespace hebb::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsage = 2 };

// Entry point of the `hebbcnn` tool. args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ReportRow {
  std::string network;  // checkpoint stem
  std::string preset;   // "default", "triangle-pruned" or "custom"
  std::string state;    // "trained" | "untrained"
  ProbeResult probe;
  std::uint64_t seed = 0;
};

nlohmann::json report_json(const std::vector<ReportRow>& rows, double runtime_seconds);
std::string report_text(const std::vector<ReportRow>& rows);

// Name of the preset a config matches, or "custom".
std::string preset_name(const NetworkConfig& config);

}  // namespace hebb::cli
