#pragma once

#include <cstdint>
#include <random>

namespace qpe {

/// Seeded random stream used by every stochastic operation. All draws are
/// derived from the mt19937_64 engine through fixed arithmetic, so a given
/// seed reproduces the same byte-for-byte results on any platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via Box-Muller; the spare value is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Counter-based seed split: per-trial seeds depend only on (master, stream,
/// counter), so adding trials never perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t counter);

/// Draw from Binomial(n, p). Exact inversion for n below `exact_threshold`
/// (default 10^6), normal approximation with continuity correction above.
/// p outside (0, 1) degenerates to 0 or n exactly.
std::int64_t binomial_draw(std::int64_t n, double p, RngStream& rng,
                           std::int64_t exact_threshold = 1000000);

}  // namespace qpe
