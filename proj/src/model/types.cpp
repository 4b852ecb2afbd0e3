#include "heraldmux/types.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "heraldmux/units.h"

namespace heraldmux {
namespace {

constexpr std::size_t kMaxChannels = 64;
constexpr std::uint64_t kMaxPulses = std::uint64_t{1} << 62;

void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

void validate_detector(const DetectorSpec& d, const std::string& where) {
  require(d.efficiency >= 0.0 && d.efficiency <= 1.0, where + ": efficiency must lie in [0, 1]");
  require(finite_nonneg(d.dark_rate_hz), where + ": dark_rate_hz must be >= 0");
  require(std::isfinite(d.gate_window_ns) && d.gate_window_ns > 0.0,
          where + ": gate_window_ns must be > 0");
  require(finite_nonneg(d.deadtime_us), where + ": deadtime_us must be >= 0");
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void add(double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    add(bits);
  }
  void add(std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    bytes(b, 8);
  }
  void add(const std::string& s) {
    add(static_cast<std::uint64_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void add(const std::optional<double>& x) {
    add(static_cast<std::uint64_t>(x.has_value()));
    if (x) add(*x);
  }
  void add(const DetectorSpec& d) {
    add(d.efficiency);
    add(d.dark_rate_hz);
    add(d.gate_window_ns);
    add(d.deadtime_us);
    add(static_cast<std::uint64_t>(d.role));
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

double MuxTopology::path_transmission(const std::string& label) const {
  const auto it = paths.find(label);
  if (it == paths.end()) throw ValidationError("topology has no path for channel '" + label + "'");
  double t = 1.0;
  for (const auto& id : it->second) {
    const auto sw = switches.find(id);
    if (sw == switches.end()) throw ValidationError("unknown switch '" + id + "'");
    t *= db_to_transmission(sw->second.insertion_loss_db);
  }
  return t;
}

MuxTopology MuxTopology::restricted_to(const std::vector<std::string>& labels) const {
  MuxTopology out;
  out.routing = routing;
  for (const auto& label : labels) {
    const auto it = paths.find(label);
    if (it == paths.end()) throw ValidationError("topology has no path for channel '" + label + "'");
    out.paths.emplace(label, it->second);
    for (const auto& id : it->second) {
      const auto sw = switches.find(id);
      if (sw != switches.end()) out.switches.emplace(id, sw->second);
    }
  }
  for (const auto& label : policy) {
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) out.policy.push_back(label);
  }
  return out;
}

MuxTopology MuxTopology::direct(const std::string& label) {
  MuxTopology t;
  t.paths.emplace(label, std::vector<std::string>{});
  t.policy.push_back(label);
  return t;
}

void MuxTopology::validate() const {
  require(!paths.empty(), "topology: at least one channel path is required");
  require(paths.size() <= kMaxChannels, "topology: at most 64 channels are supported");

  for (const auto& [id, sw] : switches) {
    require(finite_nonneg(sw.insertion_loss_db),
            "topology.switches." + id + ": insertion_loss_db must be >= 0");
  }

  std::multiset<std::string> policy_set(policy.begin(), policy.end());
  std::multiset<std::string> label_set;
  for (const auto& [label, path] : paths) label_set.insert(label);
  require(policy_set == label_set, "topology.policy must be a permutation of the channel labels");

  // Tree check: each switch has one successor, paths are cycle free, and all
  // reach the same root.
  std::map<std::string, std::string> successor;
  std::optional<std::string> root;
  for (const auto& [label, path] : paths) {
    if (path.empty()) {
      require(paths.size() == 1,
              "topology.paths." + label + ": only a lone channel may bypass the switch tree");
      continue;
    }
    std::set<std::string> seen;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const auto& id = path[k];
      require(switches.count(id) == 1, "topology.paths." + label + ": unknown switch '" + id + "'");
      require(seen.insert(id).second, "topology.paths." + label + ": switch '" + id + "' repeats");
      const std::string next = k + 1 < path.size() ? path[k + 1] : std::string{};
      const auto [it, inserted] = successor.emplace(id, next);
      require(inserted || it->second == next,
              "topology: switch '" + id + "' feeds two different successors");
    }
    if (!root) root = path.back();
    require(*root == path.back(), "topology: paths end at different output switches");
  }
}

void SpectralSpec::validate() const {
  require(pump_bandwidth_ghz > 0.0, "spectral.pump_bandwidth_ghz must be > 0");
  require(idler_filter_bandwidth_ghz > 0.0, "spectral.idler_filter_bandwidth_ghz must be > 0");
  require(signal_filter_bandwidth_ghz > 0.0, "spectral.signal_filter_bandwidth_ghz must be > 0");
  require(phasematch_bandwidth_nm > 0.0, "spectral.phasematch_bandwidth_nm must be > 0");
  require(center_wavelength_ref_nm > 0.0, "spectral.center_wavelength_ref_nm must be > 0");
  require(std::isfinite(tuning_slope_nm_per_k), "spectral.tuning_slope_nm_per_k must be finite");
}

void Scenario::validate() const {
  require(std::isfinite(laser.rep_rate_hz) && laser.rep_rate_hz > 0.0,
          "laser.rep_rate_hz must be > 0");
  require(laser.bandwidth_ghz > 0.0, "laser.bandwidth_ghz must be > 0");
  require(laser.pulse_duration_ps > 0.0, "laser.pulse_duration_ps must be > 0");

  require(!channels.empty(), "channels: at least one channel is required");
  require(channels.size() <= kMaxChannels, "channels: at most 64 channels are supported");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& c = channels[i];
    const std::string where = "channels[" + std::to_string(i) + "]";
    require(!c.label.empty(), where + ".label must be non-empty");
    require(labels.insert(c.label).second, where + ".label '" + c.label + "' is not unique");
    require(finite_nonneg(c.mu), where + ".mu must be >= 0");
    require(finite_nonneg(c.idler_loss_db), where + ".idler_loss_db must be >= 0");
    require(finite_nonneg(c.signal_loss_db), where + ".signal_loss_db must be >= 0");
    if (c.brightness_slope_per_mw) {
      require(finite_nonneg(*c.brightness_slope_per_mw),
              where + ".brightness_slope_per_mw must be >= 0");
    }
    if (c.max_car) require(*c.max_car > 1.0, where + ".max_car must be > 1");
    if (c.signal_dark_prob) {
      require(*c.signal_dark_prob >= 0.0 && *c.signal_dark_prob <= 1.0,
              where + ".signal_dark_prob must lie in [0, 1]");
    }
  }

  require(herald_detectors.size() == channels.size(),
          "detectors.herald: need exactly one herald detector per channel");
  for (std::size_t i = 0; i < herald_detectors.size(); ++i) {
    validate_detector(herald_detectors[i], "detectors.herald[" + std::to_string(i) + "]");
  }
  validate_detector(heralded_detector, "detectors.heralded");

  topology.validate();
  require(topology.num_channels() == channels.size(),
          "topology: channel count differs from channels section");
  for (const auto& c : channels) {
    require(topology.paths.count(c.label) == 1, "topology.paths: missing channel '" + c.label + "'");
  }
  if (spectral) spectral->validate();

  require(mc.num_pulses > 0, "mc.num_pulses must be > 0");
  require(mc.num_pulses <= kMaxPulses, "mc.num_pulses exceeds the 2^62 counter budget");
  require(mc.shards >= 1, "mc.shards must be >= 1");
}

std::size_t Scenario::channel_index(const std::string& label) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].label == label) return i;
  }
  throw ValidationError("no channel labelled '" + label + "'");
}

Scenario Scenario::subset(const std::vector<std::string>& labels) const {
  require(!labels.empty(), "channel subset must not be empty");
  Scenario out = *this;
  out.channels.clear();
  out.herald_detectors.clear();
  for (const auto& label : labels) {
    const std::size_t i = channel_index(label);
    out.channels.push_back(channels[i]);
    out.herald_detectors.push_back(herald_detectors.at(i));
  }
  out.topology = topology.restricted_to(labels);
  return out;
}

CountTally& CountTally::operator+=(const CountTally& other) {
  if (herald_clicks.size() != other.herald_clicks.size()) {
    throw std::invalid_argument("cannot merge tallies with different channel counts");
  }
  pulses += other.pulses;
  for (std::size_t i = 0; i < herald_clicks.size(); ++i) {
    herald_clicks[i] += other.herald_clicks[i];
    selected[i] += other.selected[i];
    channel_coincidences[i] += other.channel_coincidences[i];
  }
  coincidences += other.coincidences;
  accidentals_shifted += other.accidentals_shifted;
  heralded_detector_darks += other.heralded_detector_darks;
  unrouted += other.unrouted;
  return *this;
}

void CountTally::check_invariants() const {
  std::uint64_t total_selected = 0;
  std::uint64_t total_coincidences = 0;
  for (std::size_t i = 0; i < herald_clicks.size(); ++i) {
    if (selected[i] > herald_clicks[i]) throw std::logic_error("selected exceeds herald clicks");
    if (herald_clicks[i] > pulses) throw std::logic_error("herald clicks exceed pulses");
    if (channel_coincidences[i] > selected[i]) {
      throw std::logic_error("channel coincidences exceed selections");
    }
    total_selected += selected[i];
    total_coincidences += channel_coincidences[i];
  }
  if (coincidences > total_selected) throw std::logic_error("coincidences exceed selections");
  if (coincidences != total_coincidences) throw std::logic_error("per-channel coincidences mismatch");
  if (accidentals_shifted > total_selected) throw std::logic_error("accidentals exceed selections");
}

const char* to_string(RoutingPolicy policy) {
  return policy == RoutingPolicy::priority ? "priority" : "random";
}

const char* to_string(Kernel kernel) {
  return kernel == Kernel::skip_ahead ? "skip_ahead" : "per_pulse";
}

std::string scenario_digest(const Scenario& s) {
  Fnv1a h;
  h.add(s.laser.rep_rate_hz);
  h.add(s.laser.wavelength_nm);
  h.add(s.laser.bandwidth_ghz);
  h.add(s.laser.pulse_duration_ps);
  for (const auto& c : s.channels) {
    h.add(c.label);
    h.add(c.mu);
    h.add(c.brightness_slope_per_mw);
    h.add(c.idler_loss_db);
    h.add(c.signal_loss_db);
    h.add(c.max_car);
    h.add(c.signal_dark_prob);
  }
  for (const auto& d : s.herald_detectors) h.add(d);
  h.add(s.heralded_detector);
  for (const auto& [label, path] : s.topology.paths) {
    h.add(label);
    for (const auto& id : path) h.add(id);
  }
  for (const auto& [id, sw] : s.topology.switches) {
    h.add(id);
    h.add(sw.insertion_loss_db);
    h.add(sw.reconfig_latency_pulses);
  }
  for (const auto& label : s.topology.policy) h.add(label);
  h.add(static_cast<std::uint64_t>(s.topology.routing));
  h.add(static_cast<std::uint64_t>(s.spectral.has_value()));
  if (s.spectral) {
    const auto& sp = *s.spectral;
    for (double x : {sp.pump_bandwidth_ghz, sp.idler_filter_bandwidth_ghz,
                     sp.signal_filter_bandwidth_ghz, sp.phasematch_bandwidth_nm,
                     sp.center_wavelength_ref_nm, sp.temperature_ref_k, sp.tuning_slope_nm_per_k}) {
      h.add(x);
    }
  }
  h.add(static_cast<std::uint64_t>(s.pair_statistics));
  h.add(s.mc.num_pulses);
  h.add(s.mc.seed);
  h.add(static_cast<std::uint64_t>(s.mc.shards));
  h.add(static_cast<std::uint64_t>(s.mc.kernel));

  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h.value();
  return out.str();
}

}  // namespace heraldmux
