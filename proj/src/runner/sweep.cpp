#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "heraldmux/analytic.h"
#include "heraldmux/runner.h"
#include "heraldmux/units.h"

namespace heraldmux {

void SweepSpec::validate() const {
  if (values.empty()) throw ValidationError("sweep.values must not be empty");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("sweep.values must be finite");
  }
  if (values.size() > 1) {
    const bool up = values[1] > values[0];
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1])) {
        throw ValidationError("sweep.values must be strictly monotone");
      }
    }
  }
}

const char* to_string(SweepParam param) {
  switch (param) {
    case SweepParam::mu_scale: return "mu_scale";
    case SweepParam::pump_power_mw: return "pump_power_mw";
    case SweepParam::coincidence_per_pulse: return "coincidence_per_pulse";
    case SweepParam::herald_deadtime_us: return "herald_deadtime_us";
  }
  return "?";
}

const char* to_string(EngineSelector engine) {
  switch (engine) {
    case EngineSelector::analytic: return "analytic";
    case EngineSelector::monte_carlo: return "monte-carlo";
    case EngineSelector::both: return "both";
  }
  return "?";
}

SweepParam parse_sweep_param(const std::string& name) {
  for (auto p : {SweepParam::mu_scale, SweepParam::pump_power_mw, SweepParam::coincidence_per_pulse,
                 SweepParam::herald_deadtime_us}) {
    if (name == to_string(p)) return p;
  }
  throw ValidationError("unknown sweep parameter '" + name + "'");
}

EngineSelector parse_engine(const std::string& name) {
  for (auto e : {EngineSelector::analytic, EngineSelector::monte_carlo, EngineSelector::both}) {
    if (name == to_string(e)) return e;
  }
  throw ValidationError("unknown engine '" + name + "' (analytic|monte-carlo|both)");
}

Scenario apply_sweep_value(const Scenario& scenario, SweepParam param, double value) {
  Scenario s = scenario;
  switch (param) {
    case SweepParam::mu_scale:
      if (!(value >= 0.0)) throw ValidationError("mu_scale must be >= 0");
      for (auto& ch : s.channels) ch.mu *= value;
      break;
    case SweepParam::pump_power_mw:
      if (!(value >= 0.0)) throw ValidationError("pump power must be >= 0");
      for (auto& ch : s.channels) {
        if (!ch.brightness_slope_per_mw) {
          throw ValidationError("channel '" + ch.label +
                                "' has no brightness_slope_per_mw for a pump power sweep");
        }
        ch.mu = *ch.brightness_slope_per_mw * value;
      }
      break;
    case SweepParam::coincidence_per_pulse:
      if (!(value >= 0.0)) throw ValidationError("coincidence per pulse must be >= 0");
      for (std::size_t i = 0; i < s.channels.size(); ++i) {
        const double eta = signal_transmission(s, i) * db_to_transmission(s.channels[i].idler_loss_db);
        if (!(eta > 0.0)) throw ValidationError("channel '" + s.channels[i].label + "' is opaque");
        s.channels[i].mu = value / eta;
      }
      break;
    case SweepParam::herald_deadtime_us:
      if (!(value >= 0.0)) throw ValidationError("deadtime must be >= 0");
      for (auto& d : s.herald_detectors) d.deadtime_us = value;
      break;
  }
  return s;
}

SweepRow analytic_row(const Scenario& scenario, const std::string& param, double value) {
  const MuxPrediction p = predict(scenario);
  const auto pulses = static_cast<double>(scenario.mc.num_pulses);
  SweepRow row;
  row.sweep_param = param;
  row.value = value;
  row.engine = "analytic";
  row.rate_hz = p.coincidence_per_pulse * scenario.laser.rep_rate_hz;
  row.car = p.car;
  row.coincidences = p.coincidence_per_pulse * pulses;
  row.accidentals = p.accidental_per_pulse * pulses;
  row.seed = scenario.mc.seed;
  return row;
}

SweepRow monte_carlo_row(const SimResult& result, const std::string& param, double value) {
  SweepRow row;
  row.sweep_param = param;
  row.value = value;
  row.engine = "monte-carlo";
  row.rate_hz = result.net_rate_hz;
  row.rate_err = result.net_rate_err_hz;
  row.car = result.car_net.value;
  row.car_err = result.car_net.std_error;
  row.car_lower_bound = result.car_net.lower_bound;
  row.coincidences = static_cast<double>(result.tally.coincidences);
  row.accidentals = static_cast<double>(result.tally.accidentals_shifted);
  row.seed = result.seed;
  return row;
}

std::vector<SweepRow> sweep(const Scenario& scenario, const SweepSpec& spec) {
  spec.validate();
  scenario.validate();
  const std::string name = to_string(spec.param);
  const bool analytic = spec.engine != EngineSelector::monte_carlo;
  const bool mc = spec.engine != EngineSelector::analytic;

  const auto point = [&](std::size_t k) {
    std::vector<SweepRow> rows;
    Scenario s = apply_sweep_value(scenario, spec.param, spec.values[k]);
    s.mc.seed = scenario.mc.seed + k;
    if (analytic) rows.push_back(analytic_row(s, name, spec.values[k]));
    if (mc) rows.push_back(monte_carlo_row(run_sharded(s, s.mc.shards), name, spec.values[k]));
    return rows;
  };

  std::vector<std::vector<SweepRow>> per_point(spec.values.size());
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < spec.values.size(); start += workers) {
    std::vector<std::future<std::vector<SweepRow>>> jobs;
    const std::size_t stop = std::min(spec.values.size(), start + workers);
    for (std::size_t k = start; k < stop; ++k) jobs.push_back(std::async(std::launch::async, point, k));
    for (std::size_t k = start; k < stop; ++k) per_point[k] = jobs[k - start].get();
  }

  std::vector<SweepRow> rows;
  for (auto& r : per_point) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

Table sweep_table(const std::vector<SweepRow>& rows, const std::string& series) {
  Table t;
  if (!series.empty()) t.header.push_back("series");
  for (const char* col : {"sweep_param", "value", "engine", "rate_hz", "rate_err", "car", "car_err",
                          "coincidences", "accidentals", "seed"}) {
    t.header.emplace_back(col);
  }
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    if (!series.empty()) cells.push_back(series);
    cells.push_back(r.sweep_param);
    cells.push_back(format_number(r.value));
    cells.push_back(r.engine);
    cells.push_back(format_number(r.rate_hz));
    cells.push_back(format_number(r.rate_err));
    cells.push_back(format_number(r.car));
    cells.push_back(r.car_lower_bound ? std::string{} : format_number(r.car_err));
    cells.push_back(format_number(r.coincidences));
    cells.push_back(format_number(r.accidentals));
    cells.push_back(std::to_string(r.seed));
    t.add_row(std::move(cells));
  }
  return t;
}

}  // namespace heraldmux
