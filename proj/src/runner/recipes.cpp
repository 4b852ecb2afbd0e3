#include "heraldmux/recipes.h"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "heraldmux/analytic.h"
#include "heraldmux/units.h"

namespace heraldmux {
namespace {

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  std::vector<double> v;
  for (std::size_t k = 0; k < n; ++k) {
    v.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  return v;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> v;
  for (std::size_t k = 0; k < n; ++k) {
    v.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(n - 1)));
  }
  return v;
}

Scenario with_options(Scenario s, const RecipeOptions& options) {
  s.mc.num_pulses = options.pulses;
  s.mc.seed = options.seed;
  s.mc.shards = options.shards;
  return s;
}

// Analytic rows over the fine grid, then Monte Carlo rows over the coarse one.
void add_series(Table& out, const std::string& series, const Scenario& scenario, SweepParam param,
                const std::vector<double>& fine, const std::vector<double>& coarse,
                const RecipeOptions& options) {
  auto rows = sweep(scenario, {param, fine, EngineSelector::analytic});
  if (options.monte_carlo) {
    const auto mc = sweep(scenario, {param, coarse, EngineSelector::monte_carlo});
    rows.insert(rows.end(), mc.begin(), mc.end());
  }
  const Table t = sweep_table(rows, series);
  if (out.header.empty()) out.header = t.header;
  for (const auto& r : t.rows) out.rows.push_back(r);
}

std::string series_name(const std::vector<std::string>& channels) {
  if (channels.size() == 1) return "single-" + channels.front();
  return fmt::format("MUX-{}-1", channels.size());
}

const std::vector<std::vector<std::string>>& mux_series() {
  static const std::vector<std::vector<std::string>> s = {{"1", "4"}, {"1", "2", "4"}, {"1", "2", "3", "4"}};
  return s;
}

std::string render(const Table& t) {
  std::ostringstream out;
  t.write_text(out);
  return out.str();
}

}  // namespace

const std::vector<MeasuredRate>& measured_single_rates() {
  static const std::vector<MeasuredRate> rates = {
      {"1", 4.25, 27.0}, {"2", 4.25, 27.0}, {"3", 4.25, 6.0}, {"4", 4.25, 17.0}};
  return rates;
}

RecipeOutput reproduce_table1(const Scenario& scenario) {
  scenario.validate();
  const auto channels = analytic_channels(scenario);
  Table t;
  t.header = {"channel", "mu", "idler_loss_db", "signal_loss_db", "eta_i", "eta_s",
              "herald_dark_hz", "d_i", "d_s", "c_star", "car_max", "max_car_target",
              "c_at_mu", "rate_at_mu_hz", "car_at_mu"};
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& spec = scenario.channels[i];
    const auto& ch = channels[i];
    const OperatingPoint op = optimal_operating_point(ch.eta_s, ch.eta_i, ch.d_i, ch.d_s);
    t.add_row({spec.label, format_number(spec.mu), format_number(spec.idler_loss_db),
               format_number(spec.signal_loss_db), format_number(ch.eta_i), format_number(ch.eta_s),
               format_number(scenario.herald_detectors[i].dark_rate_hz), format_number(ch.d_i),
               format_number(ch.d_s), format_number(op.c_star), format_number(op.car_max),
               spec.max_car ? format_number(*spec.max_car) : "", format_number(ch.c),
               format_number(rate_hz(ch.c, scenario.laser.rep_rate_hz)), format_number(car(ch))});
  }
  RecipeOutput out;
  out.files.push_back({"table1.csv", t});
  out.summary = render(t);
  return out;
}

RecipeOutput reproduce_fig3a(const Scenario& scenario, const RecipeOptions& options) {
  scenario.validate();
  Scenario calibrated = with_options(scenario, options);

  Table cal;
  cal.header = {"channel", "power_mw", "measured_rate_hz", "rate_slope_hz_per_mw",
                "brightness_slope_per_mw", "implied_mu", "table_mu", "mu_ratio"};
  for (const auto& m : measured_single_rates()) {
    const Scenario single = calibrated.subset({m.label});
    const CalibrationResult r = calibrate({{m.power_mw, m.rate_hz}}, single, m.label);
    calibrated.channels[calibrated.channel_index(m.label)].brightness_slope_per_mw =
        r.brightness_slope_per_mw;
    cal.add_row({m.label, format_number(m.power_mw), format_number(m.rate_hz),
                 format_number(r.rate_slope_hz_per_mw), format_number(r.brightness_slope_per_mw),
                 format_number(r.implied_mu.front()), format_number(r.scenario_mu),
                 format_number(r.mu_ratio)});
  }

  const auto fine = linear_grid(0.25, 4.25, 17);
  const std::vector<double> coarse = {1.0, 2.0, 3.0, 4.25};
  Table series;
  for (const auto& m : measured_single_rates()) {
    add_series(series, series_name({m.label}), calibrated.subset({m.label}), SweepParam::pump_power_mw,
               fine, coarse, options);
  }
  for (const auto& labels : mux_series()) {
    add_series(series, series_name(labels), calibrated.subset(labels), SweepParam::pump_power_mw, fine,
               coarse, options);
  }

  RecipeOutput out;
  out.files.push_back({"fig3a.csv", series});
  out.files.push_back({"fig3a_calibration.csv", cal});
  out.summary = "rate-vs-power slopes calibrated at the highest measured power\n" + render(cal);
  return out;
}

RecipeOutput reproduce_fig3b(const Scenario& scenario, const RecipeOptions& options) {
  scenario.validate();
  const Scenario base = with_options(scenario, options);
  const auto channels = analytic_channels(base);
  Table series;
  Table summary;
  summary.header = {"channel", "c_star", "rate_at_c_star_hz", "car_max"};
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& ch = channels[i];
    const OperatingPoint op = optimal_operating_point(ch.eta_s, ch.eta_i, ch.d_i, ch.d_s);
    // Bare channel on the heralded detector, as in the performance table.
    Scenario single = base.subset({ch.label});
    single.topology = MuxTopology::direct(ch.label);
    add_series(series, series_name({ch.label}), single, SweepParam::coincidence_per_pulse,
               log_grid(op.c_star / 30.0, op.c_star * 30.0, 41),
               log_grid(op.c_star / 10.0, op.c_star * 30.0, 5), options);
    summary.add_row({ch.label, format_number(op.c_star),
                     format_number(rate_hz(op.c_star, base.laser.rep_rate_hz)),
                     format_number(op.car_max)});
  }
  RecipeOutput out;
  out.files.push_back({"fig3b.csv", series});
  out.summary = render(summary);
  return out;
}

RecipeOutput reproduce_fig3c(const Scenario& scenario, const RecipeOptions& options) {
  scenario.validate();
  const Scenario base = with_options(scenario, options);
  const auto fine = log_grid(0.05, 20.0, 49);
  const auto coarse = log_grid(0.1, 10.0, 7);

  Table series;
  add_series(series, "single-1", base.subset({"1"}), SweepParam::mu_scale, fine, coarse, options);
  for (const auto& labels : mux_series()) {
    add_series(series, series_name(labels), base.subset(labels), SweepParam::mu_scale, fine, coarse,
               options);
  }

  CompareOptions compare;
  compare.verify_with_mc = options.monte_carlo;
  const EnhancementReport report = compare_mux(base, mux_series(), compare);

  RecipeOutput out;
  out.files.push_back({"fig3c.csv", series});
  out.files.push_back({"fig3c_enhancement.csv", enhancement_table(report)});
  std::ostringstream summary;
  write_enhancement_report(summary, report);
  const auto& mux3 = report.configurations[1];
  bool exceeds = mux3.reachable;
  for (const auto& s : report.singles) exceeds = exceeds && (!s.reachable || mux3.rate_hz > s.rate_hz);
  summary << "MUX-3-1 above every single channel at CAR " << format_number(report.reference_car)
          << ": " << (exceeds ? "yes" : "no") << '\n';
  out.summary = summary.str();
  return out;
}

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = {"fig3a", "fig3b", "fig3c", "table1"};
  return names;
}

RecipeOutput reproduce(const std::string& figure, const Scenario& scenario,
                       const RecipeOptions& options) {
  if (figure == "table1") return reproduce_table1(scenario);
  if (figure == "fig3a") return reproduce_fig3a(scenario, options);
  if (figure == "fig3b") return reproduce_fig3b(scenario, options);
  if (figure == "fig3c") return reproduce_fig3c(scenario, options);
  throw ValidationError("unknown figure '" + figure + "' (fig3a|fig3b|fig3c|table1)");
}

}  // namespace heraldmux
