#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "heraldmux/types.h"

namespace heraldmux {

struct DetectorState {
  std::uint64_t dead_until = 0;  // first slot at which the detector is armed again
  std::uint64_t click_count = 0;
};

struct SwitchState {
  int current_route = -1;  // input feeding the switch; -1 before first use
  std::uint64_t locked_until = 0;
};

/// Ratio estimate with its Poisson standard error. When no accidentals were
/// seen the value is a lower bound computed as if one had been.
struct CarEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool lower_bound = false;
};

/// coincidences / accidentals_shifted, relative error
/// sqrt(1/coincidences + 1/accidentals).
CarEstimate estimate_car(const CountTally& tally);

struct SimResult {
  CountTally tally;
  CarEstimate car_measured;  // raw coincidences over delayed-slot accidentals
  CarEstimate car_net;       // (coincidences - accidentals) / accidentals
  double heralded_rate_hz = 0.0;
  double heralded_rate_err_hz = 0.0;
  double net_rate_hz = 0.0;  // accidental-subtracted coincidence rate
  double net_rate_err_hz = 0.0;
  std::vector<double> channel_rate_hz;
  std::vector<double> channel_rate_err_hz;
  std::uint64_t seed = 0;
  std::uint64_t pulses = 0;
  std::uint32_t shards = 1;
  std::string scenario_digest;
  std::string accidental_method = "delayed-pulse replay of the previous slot";
};

/// Everything that happened in one non-empty pulse slot. Masks use bit i for
/// channel i in scenario order.
struct SlotRecord {
  std::uint64_t slot = 0;
  std::uint64_t herald_fired = 0;    // photon or dark, before deadtime
  std::uint64_t herald_clicked = 0;  // after deadtime
  std::uint64_t signal_present = 0;  // >= 1 signal photon reaches the detector
  int selected = -1;
  bool routed = false;
  bool coincidence = false;
  bool accidental = false;
};

using SlotObserver = std::function<void(const SlotRecord&)>;

/// Single-stream pulse-slot simulation of the whole scenario (random stream
/// derived from (mc.seed, 0)). Slots in which nothing happens in any channel
/// are not reported to the observer.
SimResult simulate(const Scenario& scenario, const SlotObserver& observer = {});

/// Splits mc.num_pulses into contiguous blocks run concurrently; shard k uses
/// the stream derived from (mc.seed, k). Bit-identical for a given
/// (seed, shard_count); shard_count == 1 reproduces simulate().
SimResult run_sharded(const Scenario& scenario, std::uint32_t shard_count);

/// Builds a SimResult (rates, CAR estimates, metadata) from a merged tally.
SimResult summarize(const Scenario& scenario, const CountTally& tally, std::uint32_t shards);

}  // namespace heraldmux
