#include "heraldmux/random.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace heraldmux {
namespace {

constexpr double kPoissonInversionLimit = 30.0;

void check_mu(double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("mean pair number must be finite and >= 0");
  }
}

std::uint64_t poisson_inversion(double mu, RandomStream& rng) {
  const double u = rng.uniform();
  double p = std::exp(-mu);
  double cdf = p;
  std::uint64_t k = 0;
  while (u >= cdf) {
    ++k;
    p *= mu / static_cast<double>(k);
    const double next = cdf + p;
    if (next == cdf) break;  // tail below double resolution
    cdf = next;
  }
  return k;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

std::uint64_t RandomStream::geometric_trials(double p) {
  constexpr auto kNever = std::numeric_limits<std::uint64_t>::max();
  if (!(p > 0.0)) return kNever;
  if (p >= 1.0) return 1;
  const double trials = std::floor(std::log(uniform_positive()) / std::log1p(-p));
  if (trials >= 0x1.0p62) return kNever;
  return static_cast<std::uint64_t>(trials) + 1;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("below(0) has no valid outcome");
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

std::uint64_t draw_pair_number(double mu, PairStatistics statistics, RandomStream& rng) {
  check_mu(mu);
  if (mu == 0.0) return 0;
  switch (statistics) {
    case PairStatistics::poisson: {
      // Split large means into independent Poisson pieces so exp(-mu) never
      // underflows; the sum is Poisson(mu).
      std::uint64_t total = 0;
      double remaining = mu;
      while (remaining > kPoissonInversionLimit) {
        total += poisson_inversion(kPoissonInversionLimit, rng);
        remaining -= kPoissonInversionLimit;
      }
      return total + poisson_inversion(remaining, rng);
    }
    case PairStatistics::thermal: {
      const double ratio = mu / (1.0 + mu);
      const double n = std::floor(std::log(rng.uniform_positive()) / std::log(ratio));
      return static_cast<std::uint64_t>(n);
    }
  }
  throw std::invalid_argument("unknown pair statistics");
}

std::uint64_t thin(std::uint64_t n, double transmission, RandomStream& rng) {
  if (!(transmission >= 0.0 && transmission <= 1.0)) {
    throw std::invalid_argument("transmission must lie in [0, 1]");
  }
  if (transmission == 1.0) return n;
  if (transmission == 0.0) return 0;
  std::uint64_t survivors = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (rng.bernoulli(transmission)) ++survivors;
  }
  return survivors;
}

double pair_pgf(double mu, PairStatistics statistics, double z) {
  check_mu(mu);
  switch (statistics) {
    case PairStatistics::poisson:
      return std::exp(-mu * (1.0 - z));
    case PairStatistics::thermal:
      return 1.0 / (1.0 + mu * (1.0 - z));
  }
  throw std::invalid_argument("unknown pair statistics");
}

double any_survivor_prob(double mu, PairStatistics statistics, double transmission) {
  check_mu(mu);
  const double x = mu * transmission;
  switch (statistics) {
    case PairStatistics::poisson:
      return -std::expm1(-x);
    case PairStatistics::thermal:
      return x / (1.0 + x);
  }
  throw std::invalid_argument("unknown pair statistics");
}

double pair_number_pmf(double mu, PairStatistics statistics, std::uint64_t k) {
  check_mu(mu);
  const double kd = static_cast<double>(k);
  switch (statistics) {
    case PairStatistics::poisson:
      if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
      return std::exp(kd * std::log(mu) - mu - std::lgamma(kd + 1.0));
    case PairStatistics::thermal:
      if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
      return std::exp(kd * std::log(mu) - (kd + 1.0) * std::log1p(mu));
  }
  throw std::invalid_argument("unknown pair statistics");
}

const char* to_string(PairStatistics statistics) {
  return statistics == PairStatistics::poisson ? "poisson" : "thermal";
}

}  // namespace heraldmux
