#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heraldmux/runner.h"
#include "heraldmux/table.h"
#include "heraldmux/types.h"

namespace heraldmux {

struct RecipeOptions {
  bool monte_carlo = true;
  std::uint64_t pulses = 10'000'000'000ULL;  // per Monte Carlo point
  std::uint64_t seed = 1;
  std::uint32_t shards = 1;
};

struct RecipeFile {
  std::string name;  // file name, e.g. "fig3c.csv"
  Table table;
};

struct RecipeOutput {
  std::vector<RecipeFile> files;
  std::string summary;  // human-readable digest printed by the CLI
};

/// Single-channel rates measured at the highest pump power.
struct MeasuredRate {
  std::string label;
  double power_mw;
  double rate_hz;
};
const std::vector<MeasuredRate>& measured_single_rates();

/// The recipes expect the four-channel scenario with fitted heralded-arm
/// darks (with_fitted_signal_darks).
RecipeOutput reproduce_table1(const Scenario& scenario);
RecipeOutput reproduce_fig3a(const Scenario& scenario, const RecipeOptions& options);
RecipeOutput reproduce_fig3b(const Scenario& scenario, const RecipeOptions& options);
RecipeOutput reproduce_fig3c(const Scenario& scenario, const RecipeOptions& options);

RecipeOutput reproduce(const std::string& figure, const Scenario& scenario,
                       const RecipeOptions& options);
const std::vector<std::string>& recipe_names();

}  // namespace heraldmux
