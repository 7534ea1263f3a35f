#pragma once

#include <cstdint>
#include <string_view>

namespace twotrait {

/// Counter-based generator: output i of stream s is splitmix64 finalization of
/// seed ^ stream key advanced i times by the golden-ratio increment. Every
/// Monte Carlo sample gets its own stream, so results do not depend on how
/// samples are distributed across threads.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-counter/v1";

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : state_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

/// Binomial(n, prob) by inversion, splitting n when (1 - prob)^n would underflow.
int sample_binomial(CounterRng& rng, int n, double prob);

}  // namespace twotrait
