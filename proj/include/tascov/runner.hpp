#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tascov/simulation.hpp"

namespace tascov {

inline constexpr const char* kToolName = "tascov";
const char* version() noexcept;

struct OutputFile {
    std::string name;  ///< file name, no directory
    std::string content;
};

struct RunResult {
    std::vector<OutputFile> files;
    Warnings warnings;
};

/// Commands: estimate, targets, simulate, partition, diagnose, gridstudy.
/// `config` holds the command's settings; unknown keys are rejected. Every
/// produced file carries the resolved configuration, seed, version and
/// warnings. Set "timing": false to leave out the wall-clock duration, which
/// makes repeated runs byte-identical.
RunResult run_command(const std::string& command, const nlohmann::json& config);

/// Fills in defaults and validates types; returns the resolved config.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& config);

nlohmann::json to_json(const PrialReport& report);

/// Linear-interpolation sample quantile (type 7). EmptyInput on no data.
double quantile(std::vector<double> values, double prob);

}  // namespace tascov
