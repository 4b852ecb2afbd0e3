#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "heraldmux/analytic.h"
#include "heraldmux/runner.h"

namespace heraldmux {
namespace {

std::string configuration_name(const std::vector<std::string>& channels) {
  if (channels.size() == 1) return "single-" + channels.front();
  return fmt::format("MUX-{}-1", channels.size());
}

MuxConfiguration evaluate(const Scenario& scenario, const std::vector<std::string>& channels,
                          const CompareOptions& options) {
  MuxConfiguration cfg;
  cfg.name = configuration_name(channels);
  cfg.channels = channels;
  const Scenario sub = scenario.subset(channels);
  const auto curve = car_curve(sub, options.scale_min, options.scale_max, options.grid_points);
  for (const auto& p : curve) cfg.car_max = std::max(cfg.car_max, p.car);
  if (const auto hit = interpolate_at_car(curve, options.reference_car)) {
    cfg.reachable = true;
    cfg.scale_at_reference = hit->scale;
    cfg.rate_hz = hit->rate_hz;
    cfg.bracket_low_hz = hit->bracket_low_hz;
    cfg.bracket_high_hz = hit->bracket_high_hz;
  }
  return cfg;
}

void run_mc(const Scenario& scenario, MuxConfiguration& cfg) {
  if (!cfg.reachable) return;
  const Scenario s =
      apply_sweep_value(scenario.subset(cfg.channels), SweepParam::mu_scale, cfg.scale_at_reference);
  cfg.mc = run_sharded(s, s.mc.shards);
}

}  // namespace

std::vector<CarCurvePoint> car_curve(const Scenario& scenario, double scale_min, double scale_max,
                                     std::size_t points) {
  if (!(scale_min > 0.0 && scale_max > scale_min) || points < 2) {
    throw ValidationError("mu scale grid needs 0 < min < max and >= 2 points");
  }
  // The linear coincidence model needs mu <= 1 in every channel.
  for (const auto& ch : scenario.channels) {
    if (ch.mu > 0.0) scale_max = std::min(scale_max, 1.0 / ch.mu);
  }
  if (!(scale_max > scale_min)) throw ValidationError("mu scale grid lies above mu = 1");
  std::vector<CarCurvePoint> curve;
  curve.reserve(points);
  const double lo = std::log(scale_min);
  const double step = (std::log(scale_max) - lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    const double scale = std::exp(lo + step * static_cast<double>(k));
    const MuxPrediction p = predict(apply_sweep_value(scenario, SweepParam::mu_scale, scale));
    curve.push_back({scale, p.coincidence_per_pulse * scenario.laser.rep_rate_hz, p.car});
  }
  return curve;
}

std::optional<CurveCrossing> interpolate_at_car(const std::vector<CarCurvePoint>& curve,
                                                double reference_car) {
  if (curve.empty()) return std::nullopt;
  const auto peak = std::max_element(curve.begin(), curve.end(),
                                     [](const auto& a, const auto& b) { return a.car < b.car; });
  if (peak->car < reference_car) return std::nullopt;
  // High-rate branch only: CAR falls as the rate grows beyond the peak.
  for (auto it = peak; it + 1 != curve.end(); ++it) {
    const auto& a = *it;
    const auto& b = *(it + 1);
    if (a.car >= reference_car && b.car < reference_car) {
      const double f = (reference_car - a.car) / (b.car - a.car);
      CurveCrossing hit;
      hit.rate_hz = std::exp(std::log(a.rate_hz) + f * (std::log(b.rate_hz) - std::log(a.rate_hz)));
      hit.scale = std::exp(std::log(a.scale) + f * (std::log(b.scale) - std::log(a.scale)));
      hit.bracket_low_hz = a.rate_hz;
      hit.bracket_high_hz = b.rate_hz;
      return hit;
    }
  }
  return std::nullopt;
}

EnhancementReport compare_mux(const Scenario& scenario,
                              const std::vector<std::vector<std::string>>& subsets,
                              const CompareOptions& options) {
  if (subsets.empty()) throw ValidationError("mux comparison needs at least one channel subset");
  scenario.validate();

  EnhancementReport report;
  report.reference_car = options.reference_car;

  std::vector<std::string> singles;
  for (const auto& subset : subsets) {
    if (subset.empty()) throw ValidationError("channel subsets must not be empty");
    for (const auto& label : subset) {
      scenario.channel_index(label);
      if (std::find(singles.begin(), singles.end(), label) == singles.end()) singles.push_back(label);
    }
  }
  for (const auto& label : singles) report.singles.push_back(evaluate(scenario, {label}, options));
  for (const auto& subset : subsets) report.configurations.push_back(evaluate(scenario, subset, options));

  const MuxConfiguration* best = nullptr;
  for (const auto& s : report.singles) {
    if (s.reachable && (!best || s.rate_hz > best->rate_hz)) best = &s;
  }
  if (best) {
    report.best_single = best->channels.front();
    report.best_single_rate_hz = best->rate_hz;
  }
  for (auto& cfg : report.configurations) {
    cfg.enhancement = (cfg.reachable && best) ? cfg.rate_hz / best->rate_hz : std::nan("");
  }

  if (options.verify_with_mc && best) {
    for (auto& s : report.singles) run_mc(scenario, s);
    const SimResult& ref = *best->mc;
    for (auto& cfg : report.configurations) {
      run_mc(scenario, cfg);
      if (!cfg.mc) continue;
      const double r = cfg.mc->net_rate_hz;
      const double r0 = ref.net_rate_hz;
      cfg.mc_enhancement = r / r0;
      cfg.mc_enhancement_err =
          std::abs(cfg.mc_enhancement) *
          std::hypot(cfg.mc->net_rate_err_hz / r, ref.net_rate_err_hz / r0);
    }
  }
  return report;
}

Table enhancement_table(const EnhancementReport& report) {
  Table t;
  t.header = {"configuration", "channels", "car_max", "reachable", "mu_scale", "rate_hz",
              "enhancement", "mc_rate_hz", "mc_rate_err", "mc_car", "mc_car_err", "mc_enhancement",
              "mc_enhancement_err"};
  const auto add = [&](const MuxConfiguration& c, bool single_row) {
    std::string labels;
    for (const auto& l : c.channels) labels += (labels.empty() ? "" : "+") + l;
    t.add_row({c.name, labels, format_number(c.car_max), c.reachable ? "yes" : "no",
               format_number(c.scale_at_reference), format_number(c.rate_hz),
               single_row ? "" : format_number(c.enhancement),
               c.mc ? format_number(c.mc->net_rate_hz) : "", c.mc ? format_number(c.mc->net_rate_err_hz) : "",
               c.mc ? format_number(c.mc->car_net.value) : "",
               c.mc ? format_number(c.mc->car_net.std_error) : "",
               (c.mc && !single_row) ? format_number(c.mc_enhancement) : "",
               (c.mc && !single_row) ? format_number(c.mc_enhancement_err) : ""});
  };
  for (const auto& s : report.singles) add(s, true);
  for (const auto& c : report.configurations) add(c, false);
  return t;
}

void write_enhancement_report(std::ostream& out, const EnhancementReport& report) {
  out << "reference CAR: " << format_number(report.reference_car) << '\n';
  out << "best single channel: "
      << (report.best_single.empty() ? std::string("none reaches the reference CAR")
                                     : report.best_single + " at " +
                                           format_number(report.best_single_rate_hz) + " Hz")
      << '\n';
  enhancement_table(report).write_text(out);
}

}  // namespace heraldmux
