#include <cmath>
#include <sstream>
#include <stdexcept>

#include "heraldmux/analytic.h"
#include "heraldmux/units.h"

namespace heraldmux {
namespace {

bool in_unit_open_closed(double x) { return x > 0.0 && x <= 1.0; }

void check_efficiencies(double eta_s, double eta_i) {
  if (!in_unit_open_closed(eta_s) || !in_unit_open_closed(eta_i)) {
    throw std::domain_error("efficiencies must lie in (0, 1]");
  }
}

void check_darks(double d_i, double d_s) {
  if (!(d_i >= 0.0 && d_i <= 1.0) || !(d_s >= 0.0 && d_s <= 1.0)) {
    throw std::domain_error("dark probabilities must lie in [0, 1]");
  }
}

double car_max_for(double eta_s, double eta_i, double d_i, double d_s) {
  return optimal_operating_point(eta_s, eta_i, d_i, d_s).car_max;
}

}  // namespace

void AnalyticChannel::validate() const {
  check_efficiencies(eta_s, eta_i);
  check_darks(d_i, d_s);
  if (!(c >= 0.0 && c <= eta_s * eta_i * (1.0 + 1e-12))) {
    throw std::domain_error("channel '" + label + "': coincidence must lie in [0, eta_s * eta_i]");
  }
}

double car(double c, double eta_s, double eta_i, double d_i, double d_s) {
  check_efficiencies(eta_s, eta_i);
  check_darks(d_i, d_s);
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::domain_error("coincidence must be >= 0");
  if (c == 0.0) {
    if (d_i > 0.0 && d_s > 0.0) return 0.0;
    throw std::domain_error("CAR undefined at zero coincidences without dark counts");
  }
  return c / ((c / eta_s + d_i) * (c / eta_i + d_s));
}

double car(const AnalyticChannel& ch) { return car(ch.c, ch.eta_s, ch.eta_i, ch.d_i, ch.d_s); }

OperatingPoint optimal_operating_point(double eta_s, double eta_i, double d_i, double d_s) {
  check_efficiencies(eta_s, eta_i);
  check_darks(d_i, d_s);
  if (d_i == 0.0 || d_s == 0.0) {
    throw std::domain_error("no interior maximum: CAR is unbounded as c -> 0 without dark counts");
  }
  OperatingPoint op;
  op.c_star = std::sqrt(eta_s * eta_i * d_i * d_s);
  op.car_max = car(op.c_star, eta_s, eta_i, d_i, d_s);
  return op;
}

double fit_dark_signal(double car_max_target, double eta_s, double eta_i, double d_i) {
  if (!(car_max_target > 1.0)) throw std::domain_error("target CAR must be > 1");
  check_efficiencies(eta_s, eta_i);
  if (!(d_i > 0.0 && d_i <= 1.0)) throw std::domain_error("herald dark probability must be > 0");

  double lo = std::log(1e-12);  // car_max(lo) is the largest reachable value
  double hi = std::log(1.0);
  const double best = car_max_for(eta_s, eta_i, d_i, std::exp(lo));
  const double worst = car_max_for(eta_s, eta_i, d_i, std::exp(hi));
  if (car_max_target > best) {
    std::ostringstream msg;
    msg << "target CAR " << car_max_target << " unreachable: at most " << best
        << " for these efficiencies and herald darks (limit eta_i/d_i = " << eta_i / d_i << ")";
    throw std::domain_error(msg.str());
  }
  if (car_max_target < worst) {
    std::ostringstream msg;
    msg << "target CAR " << car_max_target << " unreachable: at least " << worst
        << " even with d_s = 1";
    throw std::domain_error(msg.str());
  }
  // car_max is strictly decreasing in d_s, so the bracket holds one root.
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (car_max_for(eta_s, eta_i, d_i, std::exp(mid)) > car_max_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

double coincidence_per_pulse(double mu, double eta_s, double eta_i) {
  if (!(mu >= 0.0)) throw std::domain_error("mu must be >= 0");
  if (!(eta_s >= 0.0 && eta_s <= 1.0) || !(eta_i >= 0.0 && eta_i <= 1.0)) {
    throw std::domain_error("transmissions must lie in [0, 1]");
  }
  return mu * eta_s * eta_i;
}

double rate_hz(double per_pulse_prob, double rep_rate_hz) {
  if (!(per_pulse_prob >= 0.0 && per_pulse_prob <= 1.0)) {
    throw std::domain_error("per-pulse probability must lie in [0, 1]");
  }
  return per_pulse_prob * rep_rate_hz;
}

double per_pulse_from_rate(double rate, double rep_rate_hz) {
  if (!(rep_rate_hz > 0.0)) throw std::domain_error("repetition rate must be > 0");
  return rate / rep_rate_hz;
}

}  // namespace heraldmux
