#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "heraldmux/analytic.h"
#include "heraldmux/cli.h"
#include "heraldmux/scenario_file.h"
#include "json.hpp"

using namespace heraldmux;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "heraldmux");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string scenario_path(const std::string& name) { return std::string(HERALDMUX_SCENARIO_DIR) + "/" + name; }

std::string write_temp(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "heraldmux_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

const char* kKitchenSink = R"({
  "laser": {"rep_rate_hz": 76e6, "wavelength_nm": 710, "bandwidth_ghz": 300, "pulse_duration_ps": 1.2},
  "channels": [
    {"label": "1", "mu": 0.0128, "brightness_slope_per_mw": 0.003, "idler_loss_db": 19,
     "signal_loss_db": 33, "max_car": 21, "signal_dark_prob": 1.5e-5},
    {"label": "2", "mu": 0.0231, "idler_loss_db": 21, "signal_loss_db": 33.5}
  ],
  "detectors": {
    "herald": [
      {"efficiency": 1, "dark_rate_hz": 1800, "gate_window_ns": 5, "deadtime_us": 3},
      {"efficiency": 1, "dark_rate_hz": 1500, "gate_window_ns": 5, "deadtime_us": 3}
    ],
    "heralded": {"efficiency": 0.9, "dark_rate_hz": 100, "gate_window_ns": 5, "deadtime_us": 0}
  },
  "topology": {
    "switches": {"S12": {"insertion_loss_db": 1, "reconfig_latency_pulses": 0}},
    "paths": {"1": ["S12"], "2": ["S12"]},
    "policy": ["1", "2"],
    "routing": "priority"
  },
  "spectral": {"pump_bandwidth_ghz": 300, "idler_filter_bandwidth_ghz": 85,
               "signal_filter_bandwidth_ghz": 100, "phasematch_bandwidth_nm": 30,
               "center_wavelength_ref_nm": 1550, "temperature_ref_k": 363, "tuning_slope_nm_per_k": 4},
  "pair_statistics": "poisson",
  "mc": {"num_pulses": 1e6, "seed": 7, "shards": 2, "kernel": "skip_ahead"},
  "sweep": {"param": "mu_scale", "values": [0.5, 1, 2], "engine": "both"}
})";

// Numeric-looking tokens of an output, in order.
std::vector<std::string> numbers(const std::string& text) {
  static const std::regex num(R"([-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?|nan|inf)");
  std::vector<std::string> out;
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(cleaned);
  std::string tok;
  while (in >> tok) {
    if (std::regex_match(tok, num)) out.push_back(tok);
  }
  return out;
}

}  // namespace

TEST_CASE("bundled scenarios parse and round trip") {
  CHECK(bundled_scenario_names() == std::vector<std::string>{"channel1.scenario", "table1.scenario"});
  for (const auto& name : bundled_scenario_names()) {
    const ScenarioFile f = parse_scenario(*bundled_scenario(name), name);
    CHECK(parse_scenario(serialize_scenario(f)) == f);
    CHECK(load_scenario_file(scenario_path(name)) == f);
  }
  const ScenarioFile t = load_scenario_file("table1.scenario");  // bundled fallback
  CHECK(t.scenario.channels.size() == 4);
  CHECK(t.scenario.herald_detectors[0].deadtime_us == 3.0);
  CHECK(t.scenario.laser.rep_rate_hz == 76e6);
}

TEST_CASE("kitchen sink round trip") {
  const ScenarioFile f = parse_scenario(kKitchenSink);
  REQUIRE(f.sweep);
  CHECK(f.sweep->engine == EngineSelector::both);
  CHECK(f.scenario.mc.num_pulses == 1'000'000);
  CHECK(f.scenario.channels[0].brightness_slope_per_mw == 0.003);
  CHECK(f.scenario.heralded_detector.role == DetectorRole::heralded);
  CHECK(parse_scenario(serialize_scenario(f)) == f);

  ScenarioFile g = f;
  g.scenario.pair_statistics = PairStatistics::thermal;
  g.scenario.topology.routing = RoutingPolicy::random_uniform;
  g.scenario.mc.kernel = Kernel::per_pulse;
  g.scenario.mc.seed = 0xFFFFFFFFFFFFFFFFULL;
  g.scenario.channels[1].mu = 1.0 / 3.0;
  g.sweep.reset();
  CHECK(parse_scenario(serialize_scenario(g)) == g);
}

TEST_CASE("every documented key path is consumed") {
  using nlohmann::json;
  const json base = json::parse(kKitchenSink);
  const ScenarioFile reference = parse_scenario(kKitchenSink);

  // concrete location and a valid replacement value for each path
  const std::map<std::string, std::function<void(json&)>> mutate = {
      {"channels[].label", [](json& j) {
         j["channels"][1]["label"] = "b";
         j["topology"]["paths"]["b"] = j["topology"]["paths"]["2"];
         j["topology"]["paths"].erase("2");
         j["topology"]["policy"][1] = "b";
       }},
      {"topology.switches.<id>.insertion_loss_db", [](json& j) { j["topology"]["switches"]["S12"]["insertion_loss_db"] = 2; }},
      {"topology.switches.<id>.reconfig_latency_pulses",
       [](json& j) { j["topology"]["switches"]["S12"]["reconfig_latency_pulses"] = 76; }},
      {"topology.paths.<label>", [](json& j) {
         j["topology"]["switches"]["R"] = {{"insertion_loss_db", 0}};
         j["topology"]["paths"]["1"] = {"S12", "R"};
         j["topology"]["paths"]["2"] = {"S12", "R"};
       }},
      {"topology.policy", [](json& j) { j["topology"]["policy"] = {"2", "1"}; }},
      {"topology.routing", [](json& j) { j["topology"]["routing"] = "random"; }},
      {"pair_statistics", [](json& j) { j["pair_statistics"] = "thermal"; }},
      {"mc.kernel", [](json& j) { j["mc"]["kernel"] = "per_pulse"; }},
      {"sweep.param", [](json& j) { j["sweep"]["param"] = "herald_deadtime_us"; }},
      {"sweep.engine", [](json& j) { j["sweep"]["engine"] = "analytic"; }},
      {"sweep.values", [](json& j) { j["sweep"]["values"] = {1, 2}; }},
  };

  for (const auto& path : documented_key_paths()) {
    CAPTURE(path);
    json j = base;
    if (const auto it = mutate.find(path); it != mutate.end()) {
      it->second(j);
    } else {
      // numeric leaf: walk the path with [] -> [0]
      json* node = &j;
      std::istringstream parts(path);
      std::string part;
      while (std::getline(parts, part, '.')) {
        const bool array = part.size() > 2 && part.substr(part.size() - 2) == "[]";
        if (array) part = part.substr(0, part.size() - 2);
        node = &(*node)[part];
        if (array) node = &(*node)[0];
      }
      REQUIRE(node->is_number());
      const double v = node->get<double>();
      const bool integral = path == "mc.num_pulses" || path == "mc.seed" || path == "mc.shards";
      if (integral) {
        *node = static_cast<std::uint64_t>(v) + 1;
      } else {
        *node = v == 1.0 ? 0.5 : v * 0.75 + 0.001;
      }
    }
    const ScenarioFile changed = parse_scenario(j.dump());
    CHECK(!(changed == reference));
  }
}

TEST_CASE("unknown keys and bad values are rejected with their location") {
  std::string text = kKitchenSink;
  text.replace(text.find("\"max_car\""), 9, "\"max_carr\"");
  try {
    parse_scenario(text, "sink.scenario");
    FAIL("accepted an unknown key");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("channels[0].max_carr") != std::string::npos);
    CHECK(msg.find("sink.scenario:5") != std::string::npos);
    CHECK(msg.find("unknown key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario(R"({"channels": [], "detectors": {"herald": []}, "extra": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_scenario(R"({"channels": [{"label": "a", "mu": "x", "idler_loss_db": 1, "signal_loss_db": 1}],
                                     "detectors": {"herald": [{}]}})"),
                  ValidationError);
  try {
    parse_scenario("{\n  \"laser\": {\n    \"rep_rate_hz\": ,\n  }\n}", "broken");
    FAIL("accepted a syntax error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("broken:3:") != std::string::npos);
  }
  // comments are allowed
  CHECK_NOTHROW(parse_scenario(std::string("// header\n") + kKitchenSink));
}

TEST_CASE("exit codes") {
  const std::string empty = write_temp("empty.scenario", R"({"channels": [], "detectors": {"herald": []}})");
  CHECK(cli({"analytic", empty}).code == 2);
  CHECK(cli({"analytic", "/nonexistent/x.scenario"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"simulate", scenario_path("channel1.scenario"), "--pulses", "0"}).code == 2);
  CHECK(cli({"simulate", scenario_path("channel1.scenario"), "--pulses", "1.5"}).code == 2);
  CHECK(cli({"reproduce", "fig9"}).code == 2);
  CHECK(cli({"sweep", scenario_path("channel1.scenario")}).code == 2);
  CHECK(cli({"analytic", scenario_path("channel1.scenario"), "--out", "/proc/heraldmux/forbidden"}).code == 3);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("analytic output") {
  const Run text = cli({"analytic", "table1.scenario"});
  REQUIRE(text.code == 0);
  const Run csv = cli({"analytic", "table1.scenario", "--format", "csv"});
  REQUIRE(csv.code == 0);
  CHECK(numbers(text.out) == numbers(csv.out));
  CHECK(csv.out.find("# channels\nchannel,mu,eta_i,eta_s,d_i,d_s,c,rate_hz,car,c_star,car_max") == 0);

  // Max CAR column reproduces the table values
  std::istringstream lines(csv.out);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  const double expected[] = {21, 15, 7, 25};
  for (double e : expected) {
    std::getline(lines, line);
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    CHECK(std::abs(std::stod(cells.at(10)) - e) < 0.5);
  }
}

TEST_CASE("simulate output") {
  const std::string path = scenario_path("table1.scenario");
  const Run a = cli({"simulate", path, "--seed", "5", "--format", "csv"});
  const Run b = cli({"simulate", path, "--seed", "5", "--format", "csv"});
  const Run c = cli({"simulate", path, "--seed", "6", "--format", "csv"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(a.out.rfind("metric,channel,value\n", 0) == 0);

  const auto value = [&](const std::string& out, const std::string& metric) {
    const auto pos = out.find("\n" + metric + ",,");
    REQUIRE(pos != std::string::npos);
    return std::stod(out.substr(pos + metric.size() + 3));
  };
  const double car = value(a.out, "car_net");
  const double err = value(a.out, "car_net_err");
  const double analytic = value(a.out, "analytic_car");
  if (value(a.out, "accidentals_shifted") > 0) {
    CHECK(std::abs(car - analytic) <= 3.0 * err);
  }
  CHECK(value(a.out, "pulses") == 1e8);

  const Run sharded = cli({"simulate", path, "--shards", "3", "--pulses", "2e8", "--format", "csv"});
  CHECK(sharded.code == 0);
  CHECK(value(sharded.out, "shards") == 3);
  CHECK(value(sharded.out, "pulses") == 2e8);
}

TEST_CASE("other commands") {
  const std::string ch1 = scenario_path("channel1.scenario");
  const Run sweep = cli({"sweep", ch1, "--param", "mu_scale", "--values", "0.5,1,2", "--format", "csv"});
  REQUIRE(sweep.code == 0);
  CHECK(sweep.out.rfind("sweep_param,value,engine,rate_hz,rate_err,car,car_err,coincidences,accidentals,seed\n", 0) == 0);
  CHECK(std::count(sweep.out.begin(), sweep.out.end(), '\n') == 4);

  const Run cal = cli({"calibrate", ch1, "--channel", "1", "--point", "4.25:27", "--format", "csv"});
  REQUIRE(cal.code == 0);
  CHECK(cal.out.find("0.0563") != std::string::npos);
  CHECK(cli({"calibrate", ch1, "--channel", "1", "--point", "4.25"}).code == 2);

  const Run cmp = cli({"mux-compare", "table1.scenario", "--subsets", "1,4;1,2,4;1,2,3,4"});
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("MUX-3-1") != std::string::npos);

  const fs::path dir = fs::temp_directory_path() / "heraldmux_cli_test" / "t1";
  const Run t1 = cli({"reproduce", "table1", "--out", dir.string()});
  REQUIRE(t1.code == 0);
  CHECK(fs::exists(dir / "table1.csv"));

  const Run c3 = cli({"reproduce", "fig3c", "--no-mc", "--out", dir.string()});
  REQUIRE(c3.code == 0);
  CHECK(fs::exists(dir / "fig3c.csv"));
  CHECK(fs::exists(dir / "fig3c_enhancement.csv"));
  CHECK(c3.out.find("above every single channel at CAR 10: yes") != std::string::npos);
}
