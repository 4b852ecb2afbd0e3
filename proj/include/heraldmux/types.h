#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heraldmux/random.h"

namespace heraldmux {

/// Raised when a scenario or one of its parts violates a documented invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LaserSpec {
  double rep_rate_hz = 76e6;
  double wavelength_nm = 710.0;
  double bandwidth_ghz = 300.0;
  double pulse_duration_ps = 1.2;

  bool operator==(const LaserSpec&) const = default;
};

/// One SPDC source and the loss chains of its two arms.
struct ChannelSpec {
  std::string label;
  double mu = 0.0;  // mean pairs per pulse, before any loss
  std::optional<double> brightness_slope_per_mw;
  double idler_loss_db = 0.0;   // whole herald arm, detector included
  double signal_loss_db = 0.0;  // signal arm up to the switch tree
  // Calibration target for the heralded-arm dark probability.
  std::optional<double> max_car;
  // Heralded-arm dark probability per gate for heralds routed from this
  // channel; overrides the heralded detector's own dark rate.
  std::optional<double> signal_dark_prob;

  bool operator==(const ChannelSpec&) const = default;
};

enum class DetectorRole { herald, heralded };

struct DetectorSpec {
  double efficiency = 1.0;
  double dark_rate_hz = 0.0;
  double gate_window_ns = 5.0;
  double deadtime_us = 0.0;
  DetectorRole role = DetectorRole::herald;

  bool operator==(const DetectorSpec&) const = default;
};

struct SwitchSpec {
  double insertion_loss_db = 0.0;
  std::uint64_t reconfig_latency_pulses = 0;

  bool operator==(const SwitchSpec&) const = default;
};

enum class RoutingPolicy { priority, random_uniform };

/// Switch tree. Each channel lists the switches its signal photon crosses,
/// leaf first; all non-empty paths end at the same root switch.
struct MuxTopology {
  std::map<std::string, std::vector<std::string>> paths;  // channel label -> switch ids
  std::map<std::string, SwitchSpec> switches;
  std::vector<std::string> policy;  // channel labels, highest priority first
  RoutingPolicy routing = RoutingPolicy::priority;

  std::size_t num_channels() const { return paths.size(); }

  /// Product of switch transmissions along a channel's path.
  double path_transmission(const std::string& label) const;

  /// Same tree restricted to a subset of channels (policy order kept).
  MuxTopology restricted_to(const std::vector<std::string>& labels) const;

  /// One channel wired straight to the output.
  static MuxTopology direct(const std::string& label);

  void validate() const;

  bool operator==(const MuxTopology&) const = default;
};

struct SpectralSpec {
  double pump_bandwidth_ghz = 300.0;
  double idler_filter_bandwidth_ghz = 85.0;
  double signal_filter_bandwidth_ghz = 100.0;
  double phasematch_bandwidth_nm = 30.0;
  double center_wavelength_ref_nm = 1550.0;
  double temperature_ref_k = 363.0;
  double tuning_slope_nm_per_k = 4.0;

  void validate() const;

  bool operator==(const SpectralSpec&) const = default;
};

enum class Kernel { skip_ahead, per_pulse };

struct McSettings {
  std::uint64_t num_pulses = 100'000'000;
  std::uint64_t seed = 1;
  std::uint32_t shards = 1;
  Kernel kernel = Kernel::skip_ahead;

  bool operator==(const McSettings&) const = default;
};

struct Scenario {
  LaserSpec laser;
  std::vector<ChannelSpec> channels;
  std::vector<DetectorSpec> herald_detectors;  // one per channel, same order
  DetectorSpec heralded_detector{1.0, 0.0, 5.0, 0.0, DetectorRole::heralded};
  MuxTopology topology;
  std::optional<SpectralSpec> spectral;
  PairStatistics pair_statistics = PairStatistics::poisson;
  McSettings mc;

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;

  std::size_t channel_index(const std::string& label) const;

  /// Same scenario with only the listed channels (detectors and topology
  /// follow).
  Scenario subset(const std::vector<std::string>& labels) const;

  bool operator==(const Scenario&) const = default;
};

/// Raw counters of one simulation run. Merging is field-wise addition.
struct CountTally {
  std::uint64_t pulses = 0;
  std::vector<std::uint64_t> herald_clicks;
  std::vector<std::uint64_t> selected;
  std::vector<std::uint64_t> channel_coincidences;
  std::uint64_t coincidences = 0;
  std::uint64_t accidentals_shifted = 0;
  std::uint64_t heralded_detector_darks = 0;
  std::uint64_t unrouted = 0;

  explicit CountTally(std::size_t channels = 0)
      : herald_clicks(channels), selected(channels), channel_coincidences(channels) {}

  CountTally& operator+=(const CountTally& other);

  /// Throws std::logic_error if a counting invariant is broken.
  void check_invariants() const;

  bool operator==(const CountTally&) const = default;
};

const char* to_string(RoutingPolicy policy);
const char* to_string(Kernel kernel);

/// Stable 64-bit FNV-1a digest over every scenario field, hex encoded.
std::string scenario_digest(const Scenario& scenario);

}  // namespace heraldmux
