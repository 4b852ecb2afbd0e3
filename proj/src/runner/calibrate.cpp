#include <algorithm>
#include <cmath>

#include "heraldmux/analytic.h"
#include "heraldmux/runner.h"
#include "heraldmux/units.h"

namespace heraldmux {

CalibrationResult calibrate(const std::vector<CalibrationPoint>& measured, const Scenario& scenario,
                            const std::string& label) {
  // One point already fixes a line through the origin.
  if (measured.empty()) throw ValidationError("calibration needs at least one measurement");
  double sum_pp = 0.0;
  double sum_pr = 0.0;
  for (const auto& m : measured) {
    if (!(m.power_mw >= 0.0) || !(m.rate_hz >= 0.0)) {
      throw ValidationError("calibration powers and rates must be >= 0");
    }
    sum_pp += m.power_mw * m.power_mw;
    sum_pr += m.power_mw * m.rate_hz;
  }
  if (sum_pp == 0.0) throw ValidationError("calibration input is degenerate (all powers zero)");

  const std::size_t idx = scenario.channel_index(label);
  const auto& ch = scenario.channels[idx];
  const double eta = signal_transmission(scenario, idx) *
                     scenario.topology.path_transmission(label) *
                     db_to_transmission(ch.idler_loss_db);

  CalibrationResult r;
  r.label = label;
  r.rate_slope_hz_per_mw = sum_pr / sum_pp;
  r.brightness_slope_per_mw = r.rate_slope_hz_per_mw / (scenario.laser.rep_rate_hz * eta);
  double sq = 0.0;
  for (const auto& m : measured) {
    const double res = m.rate_hz - r.rate_slope_hz_per_mw * m.power_mw;
    r.residuals_hz.push_back(res);
    sq += res * res;
    r.implied_mu.push_back(m.rate_hz / (scenario.laser.rep_rate_hz * eta));
  }
  r.rms_residual_hz = std::sqrt(sq / static_cast<double>(measured.size()));
  r.scenario_mu = ch.mu;
  const auto top = std::max_element(measured.begin(), measured.end(), [](const auto& a, const auto& b) {
    return a.power_mw < b.power_mw;
  });
  const double mu_top = r.brightness_slope_per_mw * top->power_mw;
  r.mu_ratio = ch.mu > 0.0 ? mu_top / ch.mu : std::nan("");
  return r;
}

}  // namespace heraldmux
