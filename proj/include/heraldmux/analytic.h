#pragma once

#include <string>
#include <utility>
#include <vector>

#include "heraldmux/types.h"

namespace heraldmux {

/// Per-pulse parameters of the coincidence-to-accidental model for one
/// channel. Transmissions are probabilities, darks are per pulse slot.
struct AnalyticChannel {
  std::string label;
  double c = 0.0;      // true coincidence probability per pulse
  double eta_s = 1.0;  // signal arm, heralded detector included
  double eta_i = 1.0;  // idler arm, herald detector included
  double d_i = 0.0;    // herald dark probability per pulse
  double d_s = 0.0;    // heralded-arm dark probability per gate

  void validate() const;
};

/// CAR = C / ((C/eta_s + d_i) (C/eta_i + d_s)).
///
/// At c == 0 the ratio is 0 when both darks are non-zero and undefined
/// otherwise (std::domain_error).
double car(double c, double eta_s, double eta_i, double d_i, double d_s);
double car(const AnalyticChannel& ch);

struct OperatingPoint {
  double c_star = 0.0;
  double car_max = 0.0;
};

/// Maximiser of car over c: c* = sqrt(eta_s eta_i d_i d_s). Throws
/// std::domain_error when a dark probability is zero (CAR grows without bound
/// as c -> 0, no interior maximum).
OperatingPoint optimal_operating_point(double eta_s, double eta_i, double d_i, double d_s);

/// Heralded-arm dark probability d_s for which the maximum CAR equals the
/// target, by bisection on log(d_s) over [1e-12, 1]. Throws std::domain_error
/// with the reachable bound when the target is out of range.
double fit_dark_signal(double car_max_target, double eta_s, double eta_i, double d_i);

double coincidence_per_pulse(double mu, double eta_s, double eta_i);

double rate_hz(double per_pulse_prob, double rep_rate_hz);
double per_pulse_from_rate(double rate_hz, double rep_rate_hz);

struct MuxPrediction {
  double herald_prob_per_pulse = 0.0;  // probability a herald is routed
  double coincidence_per_pulse = 0.0;
  double accidental_per_pulse = 0.0;
  double car = 0.0;
  std::vector<std::pair<std::string, double>> selection;  // policy order
};

/// Extension of the single-channel CAR formula to a switched multiplexer.
/// Channel i (after applying its switch-path transmission) heralds with
/// h_i = c_i / eta_s,i + d_i,i and is chosen with probability
/// s_i = h_i * P(no preferred channel heralds). The coincidence term adds
/// c_i * P(no preferred herald); accidentals add s_i * (c_i / eta_i,i + d_s,i).
/// First order in mu * eta_i; exact for one channel.
MuxPrediction mux_prediction(const std::vector<AnalyticChannel>& channels,
                             const MuxTopology& topology);

/// Per-channel analytic parameters for a scenario, in scenario channel order
/// and without switch paths. Every channel must have a heralded-arm dark
/// probability (see with_fitted_signal_darks).
std::vector<AnalyticChannel> analytic_channels(const Scenario& scenario);

/// Heralded-arm dark probability used for a channel's gates.
double signal_dark_prob(const Scenario& scenario, std::size_t channel);

/// Signal transmission of a channel up to and including the heralded
/// detector, excluding the switch path.
double signal_transmission(const Scenario& scenario, std::size_t channel);

/// Fills ChannelSpec::signal_dark_prob by fit_dark_signal for channels that
/// carry a max_car target but no explicit dark probability.
Scenario with_fitted_signal_darks(Scenario scenario);

MuxPrediction predict(const Scenario& scenario);

}  // namespace heraldmux
