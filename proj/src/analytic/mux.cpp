#include <algorithm>
#include <stdexcept>

#include "heraldmux/analytic.h"
#include "heraldmux/units.h"

namespace heraldmux {
namespace {

// P(channel `self` wins a uniform draw among all heralding channels, given
// that it heralds).
double uniform_win_prob(const std::vector<double>& herald, std::size_t self) {
  std::vector<double> k_dist{1.0};  // distribution of the number of rival heralds
  for (std::size_t j = 0; j < herald.size(); ++j) {
    if (j == self) continue;
    std::vector<double> next(k_dist.size() + 1, 0.0);
    for (std::size_t k = 0; k < k_dist.size(); ++k) {
      next[k] += k_dist[k] * (1.0 - herald[j]);
      next[k + 1] += k_dist[k] * herald[j];
    }
    k_dist = std::move(next);
  }
  double p = 0.0;
  for (std::size_t k = 0; k < k_dist.size(); ++k) p += k_dist[k] / static_cast<double>(k + 1);
  return p;
}

}  // namespace

MuxPrediction mux_prediction(const std::vector<AnalyticChannel>& channels,
                             const MuxTopology& topology) {
  if (channels.empty()) throw std::domain_error("mux prediction needs at least one channel");
  topology.validate();

  // Reorder by routing priority and fold in the switch path.
  std::vector<AnalyticChannel> ordered;
  for (const auto& label : topology.policy) {
    const auto it = std::find_if(channels.begin(), channels.end(),
                                 [&](const AnalyticChannel& c) { return c.label == label; });
    if (it == channels.end()) continue;
    AnalyticChannel ch = *it;
    ch.validate();
    const double path = topology.path_transmission(label);
    ch.c *= path;
    ch.eta_s *= path;
    ordered.push_back(ch);
  }
  if (ordered.size() != channels.size()) {
    throw std::domain_error("every channel must appear in the topology policy");
  }

  std::vector<double> herald(ordered.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    herald[i] = ordered[i].c / ordered[i].eta_s + ordered[i].d_i;
  }

  MuxPrediction out;
  double none_before = 1.0;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& ch = ordered[i];
    const double win = topology.routing == RoutingPolicy::priority ? none_before
                                                                    : uniform_win_prob(herald, i);
    const double s = herald[i] * win;
    out.selection.emplace_back(ch.label, s);
    out.herald_prob_per_pulse += s;
    out.coincidence_per_pulse += ch.c * win;
    out.accidental_per_pulse += s * (ch.c / ch.eta_i + ch.d_s);
    none_before *= 1.0 - herald[i];
  }
  if (out.coincidence_per_pulse == 0.0 && out.accidental_per_pulse == 0.0) {
    throw std::domain_error("CAR undefined at zero coincidences without dark counts");
  }
  out.car = out.coincidence_per_pulse / out.accidental_per_pulse;
  return out;
}

double signal_transmission(const Scenario& scenario, std::size_t channel) {
  return db_to_transmission(scenario.channels.at(channel).signal_loss_db) *
         scenario.heralded_detector.efficiency;
}

double signal_dark_prob(const Scenario& scenario, std::size_t channel) {
  const auto& ch = scenario.channels.at(channel);
  if (ch.signal_dark_prob) return *ch.signal_dark_prob;
  return dark_prob_per_gate(scenario.heralded_detector.dark_rate_hz, scenario.laser.rep_rate_hz);
}

std::vector<AnalyticChannel> analytic_channels(const Scenario& scenario) {
  std::vector<AnalyticChannel> out;
  for (std::size_t i = 0; i < scenario.channels.size(); ++i) {
    const auto& spec = scenario.channels[i];
    AnalyticChannel ch;
    ch.label = spec.label;
    ch.eta_i = db_to_transmission(spec.idler_loss_db);
    ch.eta_s = signal_transmission(scenario, i);
    ch.c = coincidence_per_pulse(spec.mu, ch.eta_s, ch.eta_i);
    ch.d_i = dark_prob_per_gate(scenario.herald_detectors.at(i).dark_rate_hz,
                                scenario.laser.rep_rate_hz);
    ch.d_s = signal_dark_prob(scenario, i);
    out.push_back(ch);
  }
  return out;
}

Scenario with_fitted_signal_darks(Scenario scenario) {
  for (std::size_t i = 0; i < scenario.channels.size(); ++i) {
    auto& spec = scenario.channels[i];
    if (spec.signal_dark_prob || !spec.max_car) continue;
    const double eta_i = db_to_transmission(spec.idler_loss_db);
    const double eta_s = signal_transmission(scenario, i);
    const double d_i = dark_prob_per_gate(scenario.herald_detectors.at(i).dark_rate_hz,
                                          scenario.laser.rep_rate_hz);
    spec.signal_dark_prob = fit_dark_signal(*spec.max_car, eta_s, eta_i, d_i);
  }
  return scenario;
}

MuxPrediction predict(const Scenario& scenario) {
  return mux_prediction(analytic_channels(scenario), scenario.topology);
}

}  // namespace heraldmux
