#pragma once

// Scenario builders shared by the tests.

#include <optional>
#include <string>
#include <vector>

#include "heraldmux/types.h"
#include "oracles.h"

namespace fixture {

using heraldmux::ChannelSpec;
using heraldmux::DetectorRole;
using heraldmux::DetectorSpec;
using heraldmux::MuxTopology;
using heraldmux::Scenario;

inline DetectorSpec herald(double dark_hz, double deadtime_us = 0.0) {
  return {1.0, dark_hz, 5.0, deadtime_us, DetectorRole::herald};
}

inline ChannelSpec table_channel(std::size_t i) {
  const auto& row = oracle::table1().at(i);
  ChannelSpec ch;
  ch.label = row.label;
  ch.mu = row.mu;
  ch.idler_loss_db = row.idler_db;
  ch.signal_loss_db = row.signal_db;
  ch.max_car = row.max_car;
  return ch;
}

/// One channel wired straight to the heralded detector, no deadtime.
inline Scenario single(const ChannelSpec& ch, double herald_dark_hz) {
  Scenario s;
  s.laser.rep_rate_hz = oracle::kRepRate;
  s.channels = {ch};
  s.herald_detectors = {herald(herald_dark_hz)};
  s.topology = MuxTopology::direct(ch.label);
  return s;
}

inline Scenario channel1() { return single(table_channel(0), oracle::table1()[0].herald_dark_hz); }

/// Channels joined by a balanced tree of 2x1 switches (leaf pairs, then root);
/// policy follows the given order.
inline Scenario tree(const std::vector<ChannelSpec>& channels, const std::vector<double>& dark_hz,
                     double switch_db, const std::vector<std::string>& policy,
                     double deadtime_us = 0.0) {
  Scenario s;
  s.laser.rep_rate_hz = oracle::kRepRate;
  s.channels = channels;
  for (double d : dark_hz) s.herald_detectors.push_back(herald(d, deadtime_us));
  s.topology.policy = policy;
  if (channels.size() == 1) {
    s.topology = MuxTopology::direct(channels[0].label);
    return s;
  }
  s.topology.switches["OUT"] = {switch_db, 0};
  if (channels.size() == 2) {
    for (const auto& ch : channels) s.topology.paths[ch.label] = {"OUT"};
    return s;
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const std::string leaf = "S" + std::to_string(i / 2);
    s.topology.switches[leaf] = {switch_db, 0};
    s.topology.paths[channels[i].label] = {leaf, "OUT"};
  }
  return s;
}

/// The four-channel setup: every channel behind two 1 dB switches, weakest
/// channel last.
inline Scenario table1_tree(double deadtime_us = 0.0) {
  std::vector<ChannelSpec> chans;
  std::vector<double> darks;
  for (std::size_t i = 0; i < 4; ++i) {
    chans.push_back(table_channel(i));
    darks.push_back(oracle::table1()[i].herald_dark_hz);
  }
  return tree(chans, darks, 1.0, {"1", "2", "4", "3"}, deadtime_us);
}

/// n copies of channel 1 with distinct labels behind lossless switches.
inline Scenario identical_channel1(std::size_t n) {
  std::vector<ChannelSpec> chans;
  std::vector<double> darks;
  std::vector<std::string> policy;
  for (std::size_t i = 0; i < n; ++i) {
    ChannelSpec ch = table_channel(0);
    ch.label = "c" + std::to_string(i + 1);
    chans.push_back(ch);
    darks.push_back(oracle::table1()[0].herald_dark_hz);
    policy.push_back(ch.label);
  }
  return tree(chans, darks, 0.0, policy);
}

}  // namespace fixture
