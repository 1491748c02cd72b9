#ifndef DSSE_RNG_HPP
#define DSSE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace dsse {

// Deterministic splitmix64 stream. The standard <random> distributions are
// implementation-defined, so batch results would not reproduce across
// toolchains; this generator is pinned bit-for-bit everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Stream keyed by (seed, tag, counter). Same key, same stream.
    static Rng keyed(std::uint64_t seed, std::uint64_t tag, std::uint64_t counter) {
        Rng r(seed);
        r.state_ = mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ tag);
        r.state_ = mix(r.state_ ^ counter);
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi].
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller (polar form avoided to keep the
    // draw count per call fixed).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace dsse

#endif
