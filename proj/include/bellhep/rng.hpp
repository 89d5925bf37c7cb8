#pragma once

#include <cstdint>

#include "bellhep/common.hpp"

namespace bellhep::rng {

/// Small counter-free PRNG (splitmix64). Used everywhere a reproducible
/// stream is needed; quality is adequate for the Monte Carlo estimators
/// in this project and the state is a single word, so per-element
/// substreams are cheap.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Negligible modulo bias for small n.
    std::uint32_t next_below(std::uint32_t n) {
        auto v = static_cast<std::uint32_t>(next_double() * n);
        return v < n ? v : n - 1;
    }

  private:
    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDULL;
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ULL;
    return z ^ (z >> 33);
}

/// Independent substream for element `index` of a run seeded with `seed`.
/// This is the worker-partitioning contract: element i's draws depend only
/// on (seed, i), so any split of an index range across workers reproduces
/// the serial output exactly.
inline SplitMix64 stream_for(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(mix64(seed) ^ mix64(0x9E3779B97F4A7C15ULL * (index + 1)));
}

/// Uniform direction on the unit sphere (2 draws: cos(theta), phi).
inline Vec3 uniform_unit_vector(SplitMix64& g) {
    const double c   = 2.0 * g.next_double() - 1.0;
    const double phi = 2.0 * kPi * g.next_double();
    const double s   = std::sqrt(std::max(0.0, 1.0 - c * c));
    return {s * std::cos(phi), s * std::sin(phi), c};
}

} // namespace bellhep::rng
