#include "heraldmux/scenario_file.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace heraldmux {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Key paths as documented; array elements use [], map entries <id>/<label>.
const std::vector<std::string> kKeyPaths = {
    "laser.rep_rate_hz",
    "laser.wavelength_nm",
    "laser.bandwidth_ghz",
    "laser.pulse_duration_ps",
    "channels[].label",
    "channels[].mu",
    "channels[].brightness_slope_per_mw",
    "channels[].idler_loss_db",
    "channels[].signal_loss_db",
    "channels[].max_car",
    "channels[].signal_dark_prob",
    "detectors.herald[].efficiency",
    "detectors.herald[].dark_rate_hz",
    "detectors.herald[].gate_window_ns",
    "detectors.herald[].deadtime_us",
    "detectors.heralded.efficiency",
    "detectors.heralded.dark_rate_hz",
    "detectors.heralded.gate_window_ns",
    "detectors.heralded.deadtime_us",
    "topology.switches.<id>.insertion_loss_db",
    "topology.switches.<id>.reconfig_latency_pulses",
    "topology.paths.<label>",
    "topology.policy",
    "topology.routing",
    "spectral.pump_bandwidth_ghz",
    "spectral.idler_filter_bandwidth_ghz",
    "spectral.signal_filter_bandwidth_ghz",
    "spectral.phasematch_bandwidth_nm",
    "spectral.center_wavelength_ref_nm",
    "spectral.temperature_ref_k",
    "spectral.tuning_slope_nm_per_k",
    "pair_statistics",
    "mc.num_pulses",
    "mc.seed",
    "mc.shards",
    "mc.kernel",
    "sweep.param",
    "sweep.values",
    "sweep.engine",
};

class Context {
 public:
  Context(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& key,
                         const std::string& message) const {
    std::ostringstream msg;
    msg << source_;
    if (const auto line = line_of(key)) msg << ":" << *line;
    msg << ": key '" << path << "': " << message;
    throw ValidationError(msg.str());
  }

  const std::string& source() const { return source_; }

 private:
  // Line of the first occurrence of "key"; good enough to point a reader at
  // the right spot.
  std::optional<std::size_t> line_of(const std::string& key) const {
    if (key.empty()) return std::nullopt;
    const std::string quoted = "\"" + key + "\"";
    const auto pos = text_.find(quoted);
    if (pos == std::string_view::npos) return std::nullopt;
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + pos, '\n'));
  }

  std::string_view text_;
  std::string source_;
};

class ObjectReader {
 public:
  ObjectReader(const json& value, std::string path, std::string key, const Context& ctx)
      : value_(value), path_(std::move(path)), ctx_(ctx) {
    if (!value_.is_object()) ctx_.fail(path_, key, "expected an object");
  }

  bool has(const std::string& key) const { return value_.contains(key); }

  const json& child(const std::string& key) {
    used_.insert(key);
    return value_.at(key);
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key) {
    if (!has(key)) ctx_.fail(sub(key), key, "required key is missing");
    return as_number(child(key), key);
  }

  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = child(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d < 0x1.0p64 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
    }
    ctx_.fail(sub(key), key, "expected a non-negative integer");
  }

  std::string string(const std::string& key) {
    if (!has(key)) ctx_.fail(sub(key), key, "required key is missing");
    const json& v = child(key);
    if (!v.is_string()) ctx_.fail(sub(key), key, "expected a string");
    return v.get<std::string>();
  }

  std::string string_or(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) ctx_.fail(sub(key), key, "expected a number");
    return v.get<double>();
  }

  void finish() const {
    for (const auto& [key, _] : value_.items()) {
      if (!used_.count(key)) ctx_.fail(sub(key), key, "unknown key");
    }
  }

  const Context& ctx() const { return ctx_; }

 private:
  const json& value_;
  std::string path_;
  const Context& ctx_;
  std::set<std::string> used_;
};

LaserSpec read_laser(ObjectReader r) {
  LaserSpec l;
  l.rep_rate_hz = r.number_or("rep_rate_hz", l.rep_rate_hz);
  l.wavelength_nm = r.number_or("wavelength_nm", l.wavelength_nm);
  l.bandwidth_ghz = r.number_or("bandwidth_ghz", l.bandwidth_ghz);
  l.pulse_duration_ps = r.number_or("pulse_duration_ps", l.pulse_duration_ps);
  r.finish();
  return l;
}

ChannelSpec read_channel(ObjectReader r) {
  ChannelSpec c;
  c.label = r.string("label");
  c.mu = r.number("mu");
  c.brightness_slope_per_mw = r.optional_number("brightness_slope_per_mw");
  c.idler_loss_db = r.number("idler_loss_db");
  c.signal_loss_db = r.number("signal_loss_db");
  c.max_car = r.optional_number("max_car");
  c.signal_dark_prob = r.optional_number("signal_dark_prob");
  r.finish();
  return c;
}

DetectorSpec read_detector(ObjectReader r, DetectorRole role) {
  DetectorSpec d;
  d.role = role;
  d.efficiency = r.number_or("efficiency", d.efficiency);
  d.dark_rate_hz = r.number_or("dark_rate_hz", d.dark_rate_hz);
  d.gate_window_ns = r.number_or("gate_window_ns", d.gate_window_ns);
  d.deadtime_us = r.number_or("deadtime_us", d.deadtime_us);
  r.finish();
  return d;
}

std::vector<std::string> read_string_list(const json& v, const std::string& path,
                                          const std::string& key, const Context& ctx) {
  if (!v.is_array()) ctx.fail(path, key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) ctx.fail(path, key, "expected an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

MuxTopology read_topology(ObjectReader r) {
  MuxTopology t;
  if (r.has("switches")) {
    ObjectReader sw(r.child("switches"), r.sub("switches"), "switches", r.ctx());
    for (const auto& [id, value] : r.child("switches").items()) {
      ObjectReader s(sw.child(id), sw.sub(id), id, r.ctx());
      SwitchSpec spec;
      spec.insertion_loss_db = s.number_or("insertion_loss_db", 0.0);
      spec.reconfig_latency_pulses = s.unsigned_or("reconfig_latency_pulses", 0);
      s.finish();
      t.switches.emplace(id, spec);
    }
    sw.finish();
  }
  if (r.has("paths")) {
    ObjectReader paths(r.child("paths"), r.sub("paths"), "paths", r.ctx());
    for (const auto& [label, value] : r.child("paths").items()) {
      t.paths.emplace(label, read_string_list(paths.child(label), paths.sub(label), label, r.ctx()));
    }
    paths.finish();
  }
  if (r.has("policy")) t.policy = read_string_list(r.child("policy"), r.sub("policy"), "policy", r.ctx());
  const std::string routing = r.string_or("routing", "priority");
  if (routing == "priority") {
    t.routing = RoutingPolicy::priority;
  } else if (routing == "random") {
    t.routing = RoutingPolicy::random_uniform;
  } else {
    r.ctx().fail(r.sub("routing"), "routing", "expected \"priority\" or \"random\"");
  }
  r.finish();
  return t;
}

SpectralSpec read_spectral(ObjectReader r) {
  SpectralSpec s;
  s.pump_bandwidth_ghz = r.number_or("pump_bandwidth_ghz", s.pump_bandwidth_ghz);
  s.idler_filter_bandwidth_ghz = r.number_or("idler_filter_bandwidth_ghz", s.idler_filter_bandwidth_ghz);
  s.signal_filter_bandwidth_ghz =
      r.number_or("signal_filter_bandwidth_ghz", s.signal_filter_bandwidth_ghz);
  s.phasematch_bandwidth_nm = r.number_or("phasematch_bandwidth_nm", s.phasematch_bandwidth_nm);
  s.center_wavelength_ref_nm = r.number_or("center_wavelength_ref_nm", s.center_wavelength_ref_nm);
  s.temperature_ref_k = r.number_or("temperature_ref_k", s.temperature_ref_k);
  s.tuning_slope_nm_per_k = r.number_or("tuning_slope_nm_per_k", s.tuning_slope_nm_per_k);
  r.finish();
  return s;
}

McSettings read_mc(ObjectReader r) {
  McSettings m;
  m.num_pulses = r.unsigned_or("num_pulses", m.num_pulses);
  m.seed = r.unsigned_or("seed", m.seed);
  const std::uint64_t shards = r.unsigned_or("shards", m.shards);
  if (shards > 4096) r.ctx().fail(r.sub("shards"), "shards", "at most 4096 shards");
  m.shards = static_cast<std::uint32_t>(shards);
  const std::string kernel = r.string_or("kernel", to_string(m.kernel));
  if (kernel == "skip_ahead") {
    m.kernel = Kernel::skip_ahead;
  } else if (kernel == "per_pulse") {
    m.kernel = Kernel::per_pulse;
  } else {
    r.ctx().fail(r.sub("kernel"), "kernel", "expected \"skip_ahead\" or \"per_pulse\"");
  }
  r.finish();
  return m;
}

SweepSpec read_sweep(ObjectReader r) {
  SweepSpec s;
  try {
    s.param = parse_sweep_param(r.string("param"));
  } catch (const ValidationError& e) {
    r.ctx().fail(r.sub("param"), "param", e.what());
  }
  if (!r.has("values")) r.ctx().fail(r.sub("values"), "values", "required key is missing");
  const json& values = r.child("values");
  if (!values.is_array()) r.ctx().fail(r.sub("values"), "values", "expected an array of numbers");
  for (const auto& v : values) s.values.push_back(r.as_number(v, "values"));
  try {
    s.engine = parse_engine(r.string_or("engine", "analytic"));
  } catch (const ValidationError& e) {
    r.ctx().fail(r.sub("engine"), "engine", e.what());
  }
  r.finish();
  return s;
}

ordered_json detector_json(const DetectorSpec& d) {
  return {{"efficiency", d.efficiency},
          {"dark_rate_hz", d.dark_rate_hz},
          {"gate_window_ns", d.gate_window_ns},
          {"deadtime_us", d.deadtime_us}};
}

}  // namespace

ScenarioFile parse_scenario(std::string_view text, const std::string& source) {
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/true,
                       /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    // byte offset -> line/column
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + offset, '\n');
    const auto last_nl = text.rfind('\n', offset > 0 ? offset - 1 : 0);
    const auto column = last_nl == std::string_view::npos ? offset : offset - last_nl - 1;
    std::ostringstream msg;
    msg << source << ":" << line << ":" << column << ": syntax error: " << e.what();
    throw ValidationError(msg.str());
  }

  const Context ctx(text, source);
  ObjectReader top(root, "", "", ctx);
  ScenarioFile file;
  Scenario& s = file.scenario;

  if (top.has("laser")) s.laser = read_laser(ObjectReader(top.child("laser"), "laser", "laser", ctx));

  if (!top.has("channels")) ctx.fail("channels", "channels", "required key is missing");
  const json& channels = top.child("channels");
  if (!channels.is_array()) ctx.fail("channels", "channels", "expected an array");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    s.channels.push_back(
        read_channel(ObjectReader(channels[i], "channels[" + std::to_string(i) + "]", "channels", ctx)));
  }

  if (!top.has("detectors")) ctx.fail("detectors", "detectors", "required key is missing");
  {
    ObjectReader det(top.child("detectors"), "detectors", "detectors", ctx);
    if (!det.has("herald")) ctx.fail("detectors.herald", "herald", "required key is missing");
    const json& herald = det.child("herald");
    if (!herald.is_array()) ctx.fail("detectors.herald", "herald", "expected an array");
    for (std::size_t i = 0; i < herald.size(); ++i) {
      s.herald_detectors.push_back(read_detector(
          ObjectReader(herald[i], "detectors.herald[" + std::to_string(i) + "]", "herald", ctx),
          DetectorRole::herald));
    }
    if (det.has("heralded")) {
      s.heralded_detector = read_detector(
          ObjectReader(det.child("heralded"), "detectors.heralded", "heralded", ctx),
          DetectorRole::heralded);
    }
    det.finish();
  }

  if (top.has("topology")) {
    s.topology = read_topology(ObjectReader(top.child("topology"), "topology", "topology", ctx));
  } else if (s.channels.size() == 1) {
    s.topology = MuxTopology::direct(s.channels.front().label);
  } else {
    ctx.fail("topology", "topology", "required when more than one channel is defined");
  }

  if (top.has("spectral")) {
    s.spectral = read_spectral(ObjectReader(top.child("spectral"), "spectral", "spectral", ctx));
  }

  const std::string stats = top.string_or("pair_statistics", "poisson");
  if (stats == "poisson") {
    s.pair_statistics = PairStatistics::poisson;
  } else if (stats == "thermal") {
    s.pair_statistics = PairStatistics::thermal;
  } else {
    ctx.fail("pair_statistics", "pair_statistics", "expected \"poisson\" or \"thermal\"");
  }

  if (top.has("mc")) s.mc = read_mc(ObjectReader(top.child("mc"), "mc", "mc", ctx));
  if (top.has("sweep")) file.sweep = read_sweep(ObjectReader(top.child("sweep"), "sweep", "sweep", ctx));
  top.finish();

  try {
    s.validate();
    if (file.sweep) file.sweep->validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return file;
}

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (const auto bundled = bundled_scenario(path.filename().string())) {
      return parse_scenario(*bundled, "bundled:" + path.filename().string());
    }
    throw ValidationError("cannot open scenario file '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string serialize_scenario(const ScenarioFile& file) {
  const Scenario& s = file.scenario;
  ordered_json root;
  root["laser"] = {{"rep_rate_hz", s.laser.rep_rate_hz},
                   {"wavelength_nm", s.laser.wavelength_nm},
                   {"bandwidth_ghz", s.laser.bandwidth_ghz},
                   {"pulse_duration_ps", s.laser.pulse_duration_ps}};
  root["channels"] = ordered_json::array();
  for (const auto& c : s.channels) {
    ordered_json j;
    j["label"] = c.label;
    j["mu"] = c.mu;
    if (c.brightness_slope_per_mw) j["brightness_slope_per_mw"] = *c.brightness_slope_per_mw;
    j["idler_loss_db"] = c.idler_loss_db;
    j["signal_loss_db"] = c.signal_loss_db;
    if (c.max_car) j["max_car"] = *c.max_car;
    if (c.signal_dark_prob) j["signal_dark_prob"] = *c.signal_dark_prob;
    root["channels"].push_back(j);
  }
  ordered_json herald = ordered_json::array();
  for (const auto& d : s.herald_detectors) herald.push_back(detector_json(d));
  root["detectors"] = {{"herald", herald}, {"heralded", detector_json(s.heralded_detector)}};

  ordered_json switches = ordered_json::object();
  for (const auto& [id, sw] : s.topology.switches) {
    switches[id] = {{"insertion_loss_db", sw.insertion_loss_db},
                    {"reconfig_latency_pulses", sw.reconfig_latency_pulses}};
  }
  ordered_json paths = ordered_json::object();
  for (const auto& [label, path] : s.topology.paths) paths[label] = path;
  root["topology"] = {{"switches", switches},
                      {"paths", paths},
                      {"policy", s.topology.policy},
                      {"routing", to_string(s.topology.routing)}};

  if (s.spectral) {
    const auto& sp = *s.spectral;
    root["spectral"] = {{"pump_bandwidth_ghz", sp.pump_bandwidth_ghz},
                        {"idler_filter_bandwidth_ghz", sp.idler_filter_bandwidth_ghz},
                        {"signal_filter_bandwidth_ghz", sp.signal_filter_bandwidth_ghz},
                        {"phasematch_bandwidth_nm", sp.phasematch_bandwidth_nm},
                        {"center_wavelength_ref_nm", sp.center_wavelength_ref_nm},
                        {"temperature_ref_k", sp.temperature_ref_k},
                        {"tuning_slope_nm_per_k", sp.tuning_slope_nm_per_k}};
  }
  root["pair_statistics"] = to_string(s.pair_statistics);
  root["mc"] = {{"num_pulses", s.mc.num_pulses},
                {"seed", s.mc.seed},
                {"shards", s.mc.shards},
                {"kernel", to_string(s.mc.kernel)}};
  if (file.sweep) {
    root["sweep"] = {{"param", to_string(file.sweep->param)},
                     {"values", file.sweep->values},
                     {"engine", to_string(file.sweep->engine)}};
  }
  return root.dump(2) + "\n";
}

std::vector<std::string> documented_key_paths() { return kKeyPaths; }

}  // namespace heraldmux
