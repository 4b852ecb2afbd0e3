#include "heraldmux/engine.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <stdexcept>

#include "heraldmux/analytic.h"
#include "heraldmux/units.h"

namespace heraldmux {
namespace {

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();
constexpr int kSwitchInputBase = 64;  // inputs < 64 are channels, >= 64 switches

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > kNever - b ? kNever : a + b;
}

std::uint64_t bit(std::size_t i) { return std::uint64_t{1} << i; }

struct ChannelModel {
  double mu = 0.0;
  PairStatistics statistics = PairStatistics::poisson;
  double eta_idler = 1.0;
  double eta_signal = 1.0;  // full chain: arm, switch path, heralded detector
  double d_idler = 0.0;
  double d_signal = 0.0;
  std::uint64_t herald_dead_slots = 0;
  std::vector<int> path;    // switch indices, leaf first
  std::vector<int> inputs;  // input each switch must select for this channel

  // Unconditional per-slot outcome probabilities (herald fired, signal present).
  double p_event = 0.0;
  double p_signal_only = 0.0;
  double p_herald_only = 0.0;
  double p_both = 0.0;

  void tabulate_outcomes() {
    const double d = d_idler;
    const double tau = eta_idler + eta_signal - eta_idler * eta_signal;
    const double s_idler = any_survivor_prob(mu, statistics, eta_idler);
    const double s_signal = any_survivor_prob(mu, statistics, eta_signal);
    const double s_any = any_survivor_prob(mu, statistics, tau);
    p_signal_only = std::max(0.0, (1.0 - d) * (s_any - s_idler));
    p_herald_only = std::max(0.0, d - s_signal + (1.0 - d) * s_any);
    p_both = std::max(0.0, (1.0 - d) * s_idler + s_signal - (1.0 - d) * s_any);
    p_event = std::min(1.0, d + (1.0 - d) * s_any);
  }
};

struct Event {
  std::size_t channel;
  bool herald;
  bool signal;
};

struct EngineModel {
  std::vector<ChannelModel> channels;
  std::vector<std::size_t> priority;  // channel indices, highest first
  std::vector<std::uint64_t> switch_latency;
  RoutingPolicy routing = RoutingPolicy::priority;
  std::uint64_t heralded_dead_slots = 0;
  Kernel kernel = Kernel::skip_ahead;
};

EngineModel build_model(const Scenario& scenario) {
  scenario.validate();
  EngineModel m;
  m.routing = scenario.topology.routing;
  m.kernel = scenario.mc.kernel;
  m.heralded_dead_slots =
      deadtime_slots(scenario.heralded_detector.deadtime_us, scenario.laser.rep_rate_hz);

  std::map<std::string, int> switch_index;
  for (const auto& [id, sw] : scenario.topology.switches) {
    switch_index.emplace(id, static_cast<int>(m.switch_latency.size()));
    m.switch_latency.push_back(sw.reconfig_latency_pulses);
  }

  for (std::size_t i = 0; i < scenario.channels.size(); ++i) {
    const auto& spec = scenario.channels[i];
    ChannelModel ch;
    ch.mu = spec.mu;
    ch.statistics = scenario.pair_statistics;
    ch.eta_idler = db_to_transmission(spec.idler_loss_db);
    ch.eta_signal =
        signal_transmission(scenario, i) * scenario.topology.path_transmission(spec.label);
    ch.d_idler = dark_prob_per_gate(scenario.herald_detectors[i].dark_rate_hz,
                                    scenario.laser.rep_rate_hz);
    ch.d_signal = signal_dark_prob(scenario, i);
    ch.herald_dead_slots =
        deadtime_slots(scenario.herald_detectors[i].deadtime_us, scenario.laser.rep_rate_hz);
    int input = static_cast<int>(i);
    for (const auto& id : scenario.topology.paths.at(spec.label)) {
      const int s = switch_index.at(id);
      ch.path.push_back(s);
      ch.inputs.push_back(input);
      input = kSwitchInputBase + s;
    }
    ch.tabulate_outcomes();
    m.channels.push_back(std::move(ch));
  }
  for (const auto& label : scenario.topology.policy) {
    m.priority.push_back(scenario.channel_index(label));
  }
  return m;
}

// Applies deadtime, routing, gating and the delayed-slot replay to the
// per-channel outcomes of one pulse slot. Slots must arrive in increasing
// order.
class SlotResolver {
 public:
  SlotResolver(const EngineModel& model, RandomStream& rng, CountTally& tally,
               const SlotObserver* observer)
      : model_(model),
        rng_(rng),
        tally_(tally),
        observer_(observer),
        herald_(model.channels.size()),
        switches_(model.switch_latency.size()),
        last_slot_(model.channels.size(), 0),
        last_signal_(model.channels.size(), false) {}

  void process(std::uint64_t t, const std::vector<Event>& events) {
    SlotRecord rec;
    rec.slot = t;
    for (const auto& e : events) {
      if (e.signal) rec.signal_present |= bit(e.channel);
      if (!e.herald) continue;
      rec.herald_fired |= bit(e.channel);
      auto& det = herald_[e.channel];
      if (t >= det.dead_until) {
        rec.herald_clicked |= bit(e.channel);
        ++det.click_count;
        ++tally_.herald_clicks[e.channel];
        det.dead_until = saturating_add(t, model_.channels[e.channel].herald_dead_slots + 1);
      }
    }

    if (rec.herald_clicked != 0) {
      const std::size_t sel = choose(rec.herald_clicked);
      rec.selected = static_cast<int>(sel);
      if (route(sel, t)) {
        rec.routed = true;
        ++tally_.selected[sel];
        gate(sel, t, rec);
      } else {
        ++tally_.unrouted;
      }
    }

    for (const auto& e : events) {
      last_slot_[e.channel] = t;
      last_signal_[e.channel] = e.signal;
    }
    if (observer_ && *observer_) (*observer_)(rec);
  }

 private:
  std::size_t choose(std::uint64_t clicked) {
    if (model_.routing == RoutingPolicy::priority) {
      for (std::size_t idx : model_.priority) {
        if (clicked & bit(idx)) return idx;
      }
    }
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < model_.channels.size(); ++i) {
      if (clicked & bit(i)) candidates.push_back(i);
    }
    return candidates[rng_.below(candidates.size())];
  }

  bool route(std::size_t channel, std::uint64_t t) {
    const auto& ch = model_.channels[channel];
    for (std::size_t k = 0; k < ch.path.size(); ++k) {
      const auto& sw = switches_[ch.path[k]];
      if (sw.current_route != ch.inputs[k] && t < sw.locked_until) return false;
    }
    for (std::size_t k = 0; k < ch.path.size(); ++k) {
      auto& sw = switches_[ch.path[k]];
      if (sw.current_route != ch.inputs[k]) {
        sw.current_route = ch.inputs[k];
        sw.locked_until = saturating_add(t, model_.switch_latency[ch.path[k]]);
      }
    }
    return true;
  }

  void gate(std::size_t channel, std::uint64_t t, SlotRecord& rec) {
    if (t < heralded_.dead_until) return;
    const double dark = model_.channels[channel].d_signal;

    bool click = (rec.signal_present & bit(channel)) != 0;
    if (!click && rng_.bernoulli(dark)) {
      click = true;
      ++tally_.heralded_detector_darks;
    }

    // Same gate replayed against what the routed channel delivered one slot
    // earlier.
    const bool previous_signal = t > 0 && last_slot_[channel] == t - 1 && last_signal_[channel];
    rec.accidental = previous_signal || rng_.bernoulli(dark);
    if (rec.accidental) ++tally_.accidentals_shifted;

    if (click) {
      rec.coincidence = true;
      ++tally_.coincidences;
      ++tally_.channel_coincidences[channel];
      ++heralded_.click_count;
      heralded_.dead_until = saturating_add(t, model_.heralded_dead_slots + 1);
    }
  }

  const EngineModel& model_;
  RandomStream& rng_;
  CountTally& tally_;
  const SlotObserver* observer_;
  std::vector<DetectorState> herald_;
  DetectorState heralded_;
  std::vector<SwitchState> switches_;
  std::vector<std::uint64_t> last_slot_;
  std::vector<bool> last_signal_;
};

void run_per_pulse(const EngineModel& model, std::uint64_t begin, std::uint64_t end,
                   RandomStream& rng, SlotResolver& resolver) {
  std::vector<Event> events;
  events.reserve(model.channels.size());
  for (std::uint64_t t = begin; t < end; ++t) {
    events.clear();
    for (std::size_t i = 0; i < model.channels.size(); ++i) {
      const auto& ch = model.channels[i];
      const std::uint64_t n = draw_pair_number(ch.mu, ch.statistics, rng);
      const bool idler_photon = n > 0 && thin(n, ch.eta_idler, rng) > 0;
      const bool herald = idler_photon || rng.bernoulli(ch.d_idler);
      const bool signal = n > 0 && thin(n, ch.eta_signal, rng) > 0;
      if (herald || signal) events.push_back({i, herald, signal});
    }
    if (!events.empty()) resolver.process(t, events);
  }
}

// Empty slots are skipped with geometric gaps; an occupied slot draws its
// outcome from the exact conditional law given that something happened.
void run_skip_ahead(const EngineModel& model, std::uint64_t begin, std::uint64_t end,
                    RandomStream& rng, SlotResolver& resolver) {
  const std::size_t n = model.channels.size();
  std::vector<std::uint64_t> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = saturating_add(begin, rng.geometric_trials(model.channels[i].p_event) - 1);
  }
  std::vector<Event> events;
  events.reserve(n);
  while (true) {
    const std::uint64_t t = *std::min_element(next.begin(), next.end());
    if (t >= end) break;
    events.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (next[i] != t) continue;
      const auto& ch = model.channels[i];
      const double u = rng.uniform() * (ch.p_signal_only + ch.p_herald_only + ch.p_both);
      if (u < ch.p_signal_only) {
        events.push_back({i, false, true});
      } else if (u < ch.p_signal_only + ch.p_herald_only) {
        events.push_back({i, true, false});
      } else {
        events.push_back({i, true, true});
      }
      next[i] = saturating_add(t, rng.geometric_trials(ch.p_event));
    }
    resolver.process(t, events);
  }
}

CountTally run_block(const EngineModel& model, std::uint64_t begin, std::uint64_t end,
                     std::uint64_t seed, std::uint64_t stream, const SlotObserver* observer) {
  RandomStream rng(seed, stream);
  CountTally tally(model.channels.size());
  tally.pulses = end - begin;
  SlotResolver resolver(model, rng, tally, observer);
  if (begin < end) {
    if (model.kernel == Kernel::per_pulse) {
      run_per_pulse(model, begin, end, rng, resolver);
    } else {
      run_skip_ahead(model, begin, end, rng, resolver);
    }
  }
  tally.check_invariants();
  return tally;
}

}  // namespace

CarEstimate estimate_car(const CountTally& tally) {
  CarEstimate est;
  const auto c = static_cast<double>(tally.coincidences);
  const auto a = static_cast<double>(tally.accidentals_shifted);
  if (tally.accidentals_shifted == 0) {
    est.value = c;
    est.lower_bound = true;
    return est;
  }
  est.value = c / a;
  est.std_error = c > 0.0 ? est.value * std::sqrt(1.0 / c + 1.0 / a) : 0.0;
  return est;
}

SimResult summarize(const Scenario& scenario, const CountTally& tally, std::uint32_t shards) {
  SimResult r;
  r.tally = tally;
  r.car_measured = estimate_car(tally);
  r.car_net = r.car_measured;
  r.car_net.value -= 1.0;

  const double pulses = static_cast<double>(tally.pulses);
  const double scale = scenario.laser.rep_rate_hz / pulses;
  const auto c = static_cast<double>(tally.coincidences);
  const auto a = static_cast<double>(tally.accidentals_shifted);
  r.heralded_rate_hz = c * scale;
  r.heralded_rate_err_hz = std::sqrt(c) * scale;
  r.net_rate_hz = (c - a) * scale;
  r.net_rate_err_hz = std::sqrt(c + a) * scale;
  for (std::uint64_t k : tally.channel_coincidences) {
    r.channel_rate_hz.push_back(static_cast<double>(k) * scale);
    r.channel_rate_err_hz.push_back(std::sqrt(static_cast<double>(k)) * scale);
  }
  r.seed = scenario.mc.seed;
  r.pulses = tally.pulses;
  r.shards = shards;
  r.scenario_digest = scenario_digest(scenario);
  return r;
}

SimResult simulate(const Scenario& scenario, const SlotObserver& observer) {
  const EngineModel model = build_model(scenario);
  const CountTally tally =
      run_block(model, 0, scenario.mc.num_pulses, scenario.mc.seed, 0, &observer);
  return summarize(scenario, tally, 1);
}

SimResult run_sharded(const Scenario& scenario, std::uint32_t shard_count) {
  if (shard_count < 1) throw ValidationError("shard count must be >= 1");
  if (shard_count == 1) return simulate(scenario);
  const EngineModel model = build_model(scenario);
  const std::uint64_t total = scenario.mc.num_pulses;

  std::vector<std::future<CountTally>> shards;
  for (std::uint32_t k = 0; k < shard_count; ++k) {
    // Balanced contiguous split; (total * k) / shards without overflow.
    const auto bound = [&](std::uint64_t j) {
      return total / shard_count * j + (total % shard_count) * j / shard_count;
    };
    const std::uint64_t begin = bound(k);
    const std::uint64_t end = bound(k + 1);
    shards.push_back(std::async(std::launch::async, [&model, begin, end, &scenario, k] {
      return run_block(model, begin, end, scenario.mc.seed, k, nullptr);
    }));
  }
  CountTally merged(model.channels.size());
  for (auto& f : shards) merged += f.get();
  merged.check_invariants();
  return summarize(scenario, merged, shard_count);
}

}  // namespace heraldmux
