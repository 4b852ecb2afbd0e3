#pragma once

#include <cstdint>
#include <random>

namespace heraldmux {

enum class PairStatistics { poisson, thermal };

// Random source owned by exactly one execution stream. The engine is
// mt19937_64 seeded through std::seed_seq, and every variate below is drawn
// by inversion from raw engine output, so a (seed, stream) pair yields the
// same sequence on every conforming platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_positive() { return 1.0 - uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Number of trials up to and including the first success of a Bernoulli(p)
  // sequence (>= 1). Returns UINT64_MAX when p <= 0.
  std::uint64_t geometric_trials(double p);

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

/// Pairs emitted by one pump pulse: Poisson(mu) or thermal (geometric) with
/// mean mu, P(n) = mu^n / (1 + mu)^(n + 1).
std::uint64_t draw_pair_number(double mu, PairStatistics statistics, RandomStream& rng);

/// Binomial(n, transmission) survivors of independent per-photon loss.
std::uint64_t thin(std::uint64_t n, double transmission, RandomStream& rng);

/// Probability generating function E[z^n] of the pair-number distribution.
double pair_pgf(double mu, PairStatistics statistics, double z);

/// P(at least one of the n pairs survives a per-photon transmission),
/// 1 - E[(1 - transmission)^n], evaluated without cancellation for tiny
/// mu * transmission.
double any_survivor_prob(double mu, PairStatistics statistics, double transmission);

/// Exact P(n = k) for the pair-number distribution.
double pair_number_pmf(double mu, PairStatistics statistics, std::uint64_t k);

const char* to_string(PairStatistics statistics);

}  // namespace heraldmux
