#pragma once

#include <cstdint>

namespace heraldmux {

/// Power transmission of a component with the given insertion loss,
/// 10^(-loss/10). Throws std::invalid_argument for negative loss (gain).
double db_to_transmission(double loss_db);

/// Inverse of db_to_transmission for transmissions in (0, 1].
double transmission_to_db(double transmission);

/// Dark-count probability for one gated pulse slot: dark_rate / rep_rate,
/// clamped to [0, 1].
double dark_prob_per_gate(double dark_rate_hz, double rep_rate_hz);

/// Number of pulse slots a detector stays blind after a click,
/// ceil(deadtime * rep_rate). 3 us at 76 MHz gives 228.
std::uint64_t deadtime_slots(double deadtime_us, double rep_rate_hz);

}  // namespace heraldmux
