#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heraldmux/runner.h"
#include "heraldmux/types.h"

namespace heraldmux {

/// Parsed scenario file: JSON with // and /* */ comments, unit-suffixed keys.
/// The accepted key paths are listed by documented_key_paths() and described
/// in docs/scenario_format.md; any other key is rejected.
struct ScenarioFile {
  Scenario scenario;
  std::optional<SweepSpec> sweep;

  bool operator==(const ScenarioFile&) const = default;
};

/// Parses and validates. Errors are ValidationError carrying the source name
/// and either a line/column (syntax) or the offending key path with its line.
ScenarioFile parse_scenario(std::string_view text, const std::string& source = "<input>");

/// Reads a scenario from disk. If the path does not exist and its file name
/// matches a bundled scenario, the bundled copy is used.
ScenarioFile load_scenario_file(const std::filesystem::path& path);

/// Canonical JSON text; parse_scenario(serialize_scenario(f)) == f.
std::string serialize_scenario(const ScenarioFile& file);

std::vector<std::string> documented_key_paths();

/// Scenario files compiled into the binary, keyed by file name
/// (e.g. "table1.scenario").
std::optional<std::string_view> bundled_scenario(std::string_view name);
std::vector<std::string> bundled_scenario_names();

}  // namespace heraldmux
