#include "heraldmux/units.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace heraldmux {

double db_to_transmission(double loss_db) {
  if (!(loss_db >= 0.0)) {
    throw std::invalid_argument("loss must be >= 0 dB (got " + std::to_string(loss_db) +
                                "); gain is not a valid insertion loss");
  }
  return std::pow(10.0, -loss_db / 10.0);
}

double transmission_to_db(double transmission) {
  if (!(transmission > 0.0 && transmission <= 1.0)) {
    throw std::invalid_argument("transmission must lie in (0, 1]");
  }
  return -10.0 * std::log10(transmission);
}

double dark_prob_per_gate(double dark_rate_hz, double rep_rate_hz) {
  if (!(rep_rate_hz > 0.0)) {
    throw std::invalid_argument("repetition rate must be > 0");
  }
  if (!(dark_rate_hz >= 0.0)) {
    throw std::invalid_argument("dark count rate must be >= 0");
  }
  const double p = dark_rate_hz / rep_rate_hz;
  return p > 1.0 ? 1.0 : p;
}

std::uint64_t deadtime_slots(double deadtime_us, double rep_rate_hz) {
  if (!(deadtime_us >= 0.0) || !(rep_rate_hz > 0.0)) {
    throw std::invalid_argument("deadtime must be >= 0 and repetition rate > 0");
  }
  const double slots = deadtime_us * 1e-6 * rep_rate_hz;
  // 3e-6 * 76e6 is not exactly 228 in binary; absorb representation error
  // before taking the ceiling.
  return static_cast<std::uint64_t>(std::ceil(slots - 1e-9 * (1.0 + slots)));
}

}  // namespace heraldmux
