#include "heraldmux/cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "heraldmux/analytic.h"
#include "heraldmux/recipes.h"
#include "heraldmux/runner.h"
#include "heraldmux/scenario_file.h"
#include "heraldmux/table.h"

namespace heraldmux {
namespace {

namespace fs = std::filesystem;

struct NamedTable {
  std::string name;
  Table table;
};

struct CommonFlags {
  std::string scenario_path;
  std::string format = "text";
  std::string out_dir;
  std::string pulses;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> shards;
};

std::uint64_t parse_count(const std::string& text, const std::string& flag) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(value >= 0.0) || value >= 0x1.0p64 || std::floor(value) != value) {
    throw ValidationError(flag + " expects a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(value);
}

void apply_overrides(Scenario& s, const CommonFlags& f) {
  if (!f.pulses.empty()) s.mc.num_pulses = parse_count(f.pulses, "--pulses");
  if (f.seed) s.mc.seed = *f.seed;
  if (f.shards) s.mc.shards = *f.shards;
  s.validate();
}

ScenarioFile load(const CommonFlags& f) {
  ScenarioFile file = load_scenario_file(f.scenario_path);
  file.scenario = with_fitted_signal_darks(file.scenario);
  apply_overrides(file.scenario, f);
  return file;
}

void write_tables(std::ostream& out, const std::vector<NamedTable>& tables, const std::string& format) {
  const bool csv = format == "csv";
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i > 0) out << '\n';
    if (tables.size() > 1) out << (csv ? "# " : "== ") << tables[i].name << (csv ? "\n" : " ==\n");
    if (csv) {
      tables[i].table.write_csv(out);
    } else {
      tables[i].table.write_text(out);
    }
  }
}

void save_tables(const std::string& dir, const std::vector<NamedTable>& tables) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  for (const auto& t : tables) {
    const fs::path path = fs::path(dir) / (t.name + ".csv");
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write '" + path.string() + "'");
    t.table.write_csv(file);
  }
}

void add_common(CLI::App* cmd, CommonFlags& f, bool mc_flags) {
  cmd->add_option("--format", f.format, "output format")->check(CLI::IsMember({"csv", "text"}));
  cmd->add_option("--out", f.out_dir, "directory for CSV output files");
  if (mc_flags) {
    cmd->add_option("--pulses", f.pulses, "Monte Carlo pulse slots (overrides mc.num_pulses)");
    cmd->add_option("--seed", f.seed, "random seed (overrides mc.seed)");
    cmd->add_option("--shards", f.shards, "parallel shards (overrides mc.shards)");
  }
}

std::vector<NamedTable> analytic_tables(const Scenario& s) {
  Table channels;
  channels.header = {"channel", "mu", "eta_i", "eta_s", "d_i", "d_s", "c", "rate_hz", "car",
                     "c_star", "car_max", "car_at_c_star_div_10", "car_at_c_star_x_10"};
  for (const auto& ch : analytic_channels(s)) {
    std::string c_star = "none";
    std::string car_max = "inf";
    std::string low = "";
    std::string high = "";
    if (ch.d_i > 0.0 && ch.d_s > 0.0) {
      const OperatingPoint op = optimal_operating_point(ch.eta_s, ch.eta_i, ch.d_i, ch.d_s);
      c_star = format_number(op.c_star);
      car_max = format_number(op.car_max);
      low = format_number(car(op.c_star / 10.0, ch.eta_s, ch.eta_i, ch.d_i, ch.d_s));
      high = format_number(car(op.c_star * 10.0, ch.eta_s, ch.eta_i, ch.d_i, ch.d_s));
    }
    channels.add_row({ch.label, format_number(s.channels[s.channel_index(ch.label)].mu),
                      format_number(ch.eta_i), format_number(ch.eta_s), format_number(ch.d_i),
                      format_number(ch.d_s), format_number(ch.c),
                      format_number(rate_hz(ch.c, s.laser.rep_rate_hz)), format_number(car(ch)), c_star,
                      car_max, low, high});
  }

  const MuxPrediction p = predict(s);
  Table mux;
  mux.header = {"channels", "routing", "herald_prob_per_pulse", "coincidence_per_pulse", "rate_hz",
                "accidental_per_pulse", "car"};
  std::string labels;
  for (const auto& l : s.topology.policy) labels += (labels.empty() ? "" : "+") + l;
  mux.add_row({labels, to_string(s.topology.routing), format_number(p.herald_prob_per_pulse),
               format_number(p.coincidence_per_pulse),
               format_number(rate_hz(p.coincidence_per_pulse, s.laser.rep_rate_hz)),
               format_number(p.accidental_per_pulse), format_number(p.car)});

  Table selection;
  selection.header = {"channel", "path_transmission", "selection_prob"};
  for (const auto& [label, prob] : p.selection) {
    selection.add_row({label, format_number(s.topology.path_transmission(label)), format_number(prob)});
  }
  return {{"channels", channels}, {"multiplexer", mux}, {"selection", selection}};
}

Table simulate_table(const Scenario& s, const SimResult& r) {
  Table t;
  t.header = {"metric", "channel", "value"};
  const auto num = [&](const std::string& metric, const std::string& channel, double v) {
    t.add_row({metric, channel, format_number(v)});
  };
  const auto count = [&](const std::string& metric, const std::string& channel, std::uint64_t v) {
    t.add_row({metric, channel, std::to_string(v)});
  };
  t.add_row({"scenario_digest", "", r.scenario_digest});
  count("seed", "", r.seed);
  count("pulses", "", r.pulses);
  count("shards", "", r.shards);
  t.add_row({"kernel", "", to_string(s.mc.kernel)});
  t.add_row({"accidental_method", "", r.accidental_method});
  count("coincidences", "", r.tally.coincidences);
  count("accidentals_shifted", "", r.tally.accidentals_shifted);
  count("heralded_detector_darks", "", r.tally.heralded_detector_darks);
  count("unrouted_heralds", "", r.tally.unrouted);
  num("car_measured", "", r.car_measured.value);
  num("car_measured_err", "", r.car_measured.std_error);
  num("car_net", "", r.car_net.value);
  num("car_net_err", "", r.car_net.std_error);
  t.add_row({"car_is_lower_bound", "", r.car_net.lower_bound ? "true" : "false"});
  num("heralded_rate_hz", "", r.heralded_rate_hz);
  num("heralded_rate_err_hz", "", r.heralded_rate_err_hz);
  num("net_rate_hz", "", r.net_rate_hz);
  num("net_rate_err_hz", "", r.net_rate_err_hz);
  const MuxPrediction p = predict(s);
  num("analytic_car", "", p.car);
  num("analytic_rate_hz", "", p.coincidence_per_pulse * s.laser.rep_rate_hz);
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    const std::string& label = s.channels[i].label;
    count("herald_clicks", label, r.tally.herald_clicks[i]);
    count("selected", label, r.tally.selected[i]);
    count("coincidences", label, r.tally.channel_coincidences[i]);
    num("rate_hz", label, r.channel_rate_hz[i]);
    num("rate_err_hz", label, r.channel_rate_err_hz[i]);
  }
  return t;
}

std::vector<std::vector<std::string>> parse_subsets(const std::string& text) {
  std::vector<std::vector<std::string>> subsets;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    std::vector<std::string> labels;
    std::stringstream items(group);
    std::string label;
    while (std::getline(items, label, ',')) {
      if (!label.empty()) labels.push_back(label);
    }
    if (labels.empty()) throw ValidationError("empty channel subset in '" + text + "'");
    subsets.push_back(labels);
  }
  return subsets;
}

CalibrationPoint parse_point(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("--point expects POWER_MW:RATE_HZ, got '" + text + "'");
  try {
    std::size_t a = 0;
    std::size_t b = 0;
    const std::string p = text.substr(0, colon);
    const std::string r = text.substr(colon + 1);
    const double power = std::stod(p, &a);
    const double rate = std::stod(r, &b);
    if (a != p.size() || b != r.size()) throw std::invalid_argument("trailing characters");
    return {power, rate};
  } catch (const std::logic_error&) {
    throw ValidationError("--point expects POWER_MW:RATE_HZ, got '" + text + "'");
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heralded photon source multiplexing: analytic CAR model and pulse-slot Monte Carlo",
               "heraldmux"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* analytic_cmd = app.add_subcommand("analytic", "per-channel CAR model and multiplexer prediction");
  analytic_cmd->add_option("scenario", flags.scenario_path, "scenario file")->required();
  add_common(analytic_cmd, flags, false);

  std::string kernel;
  auto* simulate_cmd = app.add_subcommand("simulate", "pulse-slot Monte Carlo of the whole scenario");
  simulate_cmd->add_option("scenario", flags.scenario_path, "scenario file")->required();
  simulate_cmd->add_option("--kernel", kernel, "skip_ahead or per_pulse")
      ->check(CLI::IsMember({"skip_ahead", "per_pulse"}));
  add_common(simulate_cmd, flags, true);

  std::string param;
  std::string values;
  std::string engine;
  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep (sweep section or flags)");
  sweep_cmd->add_option("scenario", flags.scenario_path, "scenario file")->required();
  sweep_cmd->add_option("--param", param, "mu_scale|pump_power_mw|coincidence_per_pulse|herald_deadtime_us");
  sweep_cmd->add_option("--values", values, "comma separated grid");
  sweep_cmd->add_option("--engine", engine, "analytic|monte-carlo|both");
  add_common(sweep_cmd, flags, true);

  std::string subsets;
  CompareOptions compare;
  auto* compare_cmd = app.add_subcommand("mux-compare", "enhancement of channel subsets at a reference CAR");
  compare_cmd->add_option("scenario", flags.scenario_path, "scenario file")->required();
  compare_cmd->add_option("--subsets", subsets, "subsets like '1,4;1,2,4' (default: all channels)");
  compare_cmd->add_option("--reference-car", compare.reference_car, "CAR level");
  compare_cmd->add_flag("--mc", compare.verify_with_mc, "verify with the Monte Carlo engine");
  add_common(compare_cmd, flags, true);

  std::string channel;
  std::vector<std::string> points;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "brightness slope from measured rates");
  calibrate_cmd->add_option("scenario", flags.scenario_path, "scenario file")->required();
  calibrate_cmd->add_option("--channel", channel, "channel label")->required();
  calibrate_cmd->add_option("--point", points, "POWER_MW:RATE_HZ, repeatable")->required();
  add_common(calibrate_cmd, flags, false);

  std::string figure;
  bool no_mc = false;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "write the CSV files of a figure or table");
  reproduce_cmd->add_option("figure", figure, "fig3a|fig3b|fig3c|table1")->required();
  reproduce_cmd->add_option("--scenario", flags.scenario_path, "scenario (default: bundled table1.scenario)");
  reproduce_cmd->add_flag("--no-mc", no_mc, "analytic series only");
  add_common(reproduce_cmd, flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_validation;
  }

  try {
    std::vector<NamedTable> tables;
    std::ostringstream preamble;

    if (*analytic_cmd) {
      const ScenarioFile file = load(flags);
      tables = analytic_tables(file.scenario);
    } else if (*simulate_cmd) {
      ScenarioFile file = load(flags);
      if (!kernel.empty()) file.scenario.mc.kernel = kernel == "per_pulse" ? Kernel::per_pulse : Kernel::skip_ahead;
      const SimResult r = run_sharded(file.scenario, file.scenario.mc.shards);
      tables.push_back({"simulate", simulate_table(file.scenario, r)});
    } else if (*sweep_cmd) {
      const ScenarioFile file = load(flags);
      SweepSpec spec = file.sweep.value_or(SweepSpec{});
      if (!param.empty()) spec.param = parse_sweep_param(param);
      if (!engine.empty()) spec.engine = parse_engine(engine);
      if (!values.empty()) {
        spec.values.clear();
        std::stringstream items(values);
        std::string item;
        while (std::getline(items, item, ',')) {
          std::size_t used = 0;
          double v = 0.0;
          try {
            v = std::stod(item, &used);
          } catch (const std::exception&) {
            used = 0;
          }
          if (used == 0 || used != item.size()) throw ValidationError("bad --values entry '" + item + "'");
          spec.values.push_back(v);
        }
      }
      if (!file.sweep && values.empty()) {
        throw ValidationError("no sweep grid: add a sweep section or pass --values");
      }
      tables.push_back({"sweep", sweep_table(sweep(file.scenario, spec))});
    } else if (*compare_cmd) {
      const ScenarioFile file = load(flags);
      std::vector<std::vector<std::string>> groups;
      if (subsets.empty()) {
        std::vector<std::string> all;
        for (const auto& ch : file.scenario.channels) all.push_back(ch.label);
        groups.push_back(all);
      } else {
        groups = parse_subsets(subsets);
      }
      const EnhancementReport report = compare_mux(file.scenario, groups, compare);
      if (flags.format == "text") {
        preamble << "reference CAR: " << format_number(report.reference_car) << '\n'
                 << "best single channel: "
                 << (report.best_single.empty() ? std::string("none")
                                                : report.best_single + " at " +
                                                      format_number(report.best_single_rate_hz) + " Hz")
                 << "\n\n";
      }
      tables.push_back({"mux_compare", enhancement_table(report)});
    } else if (*calibrate_cmd) {
      const ScenarioFile file = load(flags);
      std::vector<CalibrationPoint> measured;
      for (const auto& p : points) measured.push_back(parse_point(p));
      const CalibrationResult r = calibrate(measured, file.scenario, channel);
      Table fit;
      fit.header = {"channel", "rate_slope_hz_per_mw", "brightness_slope_per_mw", "rms_residual_hz",
                    "scenario_mu", "mu_ratio"};
      fit.add_row({r.label, format_number(r.rate_slope_hz_per_mw), format_number(r.brightness_slope_per_mw),
                   format_number(r.rms_residual_hz), format_number(r.scenario_mu), format_number(r.mu_ratio)});
      Table detail;
      detail.header = {"power_mw", "rate_hz", "residual_hz", "implied_mu"};
      for (std::size_t i = 0; i < measured.size(); ++i) {
        detail.add_row({format_number(measured[i].power_mw), format_number(measured[i].rate_hz),
                        format_number(r.residuals_hz[i]), format_number(r.implied_mu[i])});
      }
      tables = {{"calibration", fit}, {"calibration_points", detail}};
    } else if (*reproduce_cmd) {
      if (flags.scenario_path.empty()) flags.scenario_path = "table1.scenario";
      RecipeOptions options;
      options.monte_carlo = !no_mc;
      if (!flags.pulses.empty()) options.pulses = parse_count(flags.pulses, "--pulses");
      if (options.pulses == 0) throw ValidationError("--pulses must be > 0");
      if (flags.seed) options.seed = *flags.seed;
      if (flags.shards) options.shards = *flags.shards;
      if (options.shards == 0) throw ValidationError("--shards must be >= 1");
      CommonFlags base;
      base.scenario_path = flags.scenario_path;
      const ScenarioFile file = load(base);
      const RecipeOutput result = reproduce(figure, file.scenario, options);
      const std::string dir = flags.out_dir.empty() ? std::string(".") : flags.out_dir;
      fs::create_directories(dir);
      for (const auto& f : result.files) {
        const fs::path path = fs::path(dir) / f.name;
        std::ofstream file_out(path);
        if (!file_out) throw std::runtime_error("cannot write '" + path.string() + "'");
        f.table.write_csv(file_out);
      }
      if (flags.format == "csv") {
        for (std::size_t i = 0; i < result.files.size(); ++i) {
          if (i > 0) out << '\n';
          if (result.files.size() > 1) out << "# " << result.files[i].name << '\n';
          result.files[i].table.write_csv(out);
        }
      } else {
        out << result.summary;
        for (const auto& f : result.files) out << "wrote " << (fs::path(dir) / f.name).string() << '\n';
      }
      return exit_ok;
    }

    out << preamble.str();
    write_tables(out, tables, flags.format);
    save_tables(flags.out_dir, tables);
    return exit_ok;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return exit_runtime;
  }
}

}  // namespace heraldmux
