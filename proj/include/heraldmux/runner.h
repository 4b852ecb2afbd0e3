#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "heraldmux/engine.h"
#include "heraldmux/table.h"
#include "heraldmux/types.h"

namespace heraldmux {

enum class EngineSelector { analytic, monte_carlo, both };

enum class SweepParam {
  mu_scale,               // every channel's mu multiplied by the value
  pump_power_mw,          // mu = brightness_slope_per_mw * value
  coincidence_per_pulse,  // every channel's mu set so that its c equals the value
  herald_deadtime_us,     // all herald detectors
};

struct SweepSpec {
  SweepParam param = SweepParam::mu_scale;
  std::vector<double> values;
  EngineSelector engine = EngineSelector::analytic;

  /// Grid must be non-empty and strictly monotone.
  void validate() const;

  bool operator==(const SweepSpec&) const = default;
};

const char* to_string(SweepParam param);
const char* to_string(EngineSelector engine);
SweepParam parse_sweep_param(const std::string& name);
EngineSelector parse_engine(const std::string& name);

struct SweepRow {
  std::string sweep_param;
  double value = 0.0;
  std::string engine;
  double rate_hz = 0.0;
  double rate_err = 0.0;
  double car = 0.0;
  double car_err = 0.0;
  bool car_lower_bound = false;
  double coincidences = 0.0;
  double accidentals = 0.0;
  std::uint64_t seed = 0;
};

/// Scenario with one grid value applied.
Scenario apply_sweep_value(const Scenario& scenario, SweepParam param, double value);

/// One row per grid point per engine, ordered by grid index then engine
/// (analytic first). Grid points run concurrently; Monte Carlo point k uses
/// seed mc.seed + k.
std::vector<SweepRow> sweep(const Scenario& scenario, const SweepSpec& spec);

SweepRow analytic_row(const Scenario& scenario, const std::string& param, double value);
SweepRow monte_carlo_row(const SimResult& result, const std::string& param, double value);

/// Columns: sweep_param,value,engine,rate_hz,rate_err,car,car_err,
/// coincidences,accidentals,seed. A non-empty series name adds a leading
/// `series` column.
Table sweep_table(const std::vector<SweepRow>& rows, const std::string& series = {});

struct CompareOptions {
  double reference_car = 10.0;
  double scale_min = 1e-3;
  double scale_max = 1e3;
  std::size_t grid_points = 1201;  // log-spaced mu scales
  bool verify_with_mc = false;     // run the engine at each interpolated scale
};

struct MuxConfiguration {
  std::string name;
  std::vector<std::string> channels;
  bool reachable = false;
  double car_max = 0.0;
  double scale_at_reference = 0.0;
  double rate_hz = 0.0;  // interpolated at the reference CAR
  double bracket_low_hz = 0.0;
  double bracket_high_hz = 0.0;
  double enhancement = 0.0;
  std::optional<SimResult> mc;
  double mc_enhancement = 0.0;
  double mc_enhancement_err = 0.0;
};

struct EnhancementReport {
  double reference_car = 10.0;
  std::string best_single;
  double best_single_rate_hz = 0.0;
  std::vector<MuxConfiguration> singles;
  std::vector<MuxConfiguration> configurations;
};

/// Rate of each channel subset at the reference CAR on the high-rate branch
/// of its CAR-vs-rate curve (piecewise linear in log rate), divided by the
/// best single channel of the same arrangement. Singles keep their switch
/// paths.
EnhancementReport compare_mux(const Scenario& scenario,
                              const std::vector<std::vector<std::string>>& subsets,
                              const CompareOptions& options = {});

/// Analytic CAR curve of one configuration over a log grid of mu scales. The
/// grid stops where the brightest channel reaches mu = 1.
struct CarCurvePoint {
  double scale;
  double rate_hz;
  double car;
};
std::vector<CarCurvePoint> car_curve(const Scenario& scenario, double scale_min, double scale_max,
                                     std::size_t points);

/// Interpolates the high-rate branch of a curve at a CAR level. Returns
/// nullopt when the level is not crossed.
struct CurveCrossing {
  double scale;
  double rate_hz;
  double bracket_low_hz;
  double bracket_high_hz;
};
std::optional<CurveCrossing> interpolate_at_car(const std::vector<CarCurvePoint>& curve,
                                                double reference_car);

struct CalibrationPoint {
  double power_mw;
  double rate_hz;
};

struct CalibrationResult {
  std::string label;
  double rate_slope_hz_per_mw = 0.0;
  double brightness_slope_per_mw = 0.0;  // pairs per pulse per mW
  std::vector<double> residuals_hz;
  double rms_residual_hz = 0.0;
  std::vector<double> implied_mu;  // at each measured power
  double scenario_mu = 0.0;
  double mu_ratio = 0.0;  // implied mu at the highest power / scenario mu
};

/// Least-squares fit of rate = slope * power through the origin, converted to
/// pairs per pulse per mW with the channel's loss chain (switch path
/// included).
CalibrationResult calibrate(const std::vector<CalibrationPoint>& measured, const Scenario& scenario,
                            const std::string& label);

/// One row per single and per configuration; MC columns empty when not run.
Table enhancement_table(const EnhancementReport& report);
void write_enhancement_report(std::ostream& out, const EnhancementReport& report);

}  // namespace heraldmux
