#pragma once

#include <cmath>
#include <cstdint>

namespace estalg {

/// Counter-based random stream built on the SplitMix64 finalizer
/// (Steele, Lea, Flood 2014): output(i) = mix(seed + (i+1) * 0x9E3779B97F4A7C15).
/// Random access by counter makes every draw reproducible bit-for-bit across
/// platforms and independent of evaluation order.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed ^ (stream * 0xD2B74407B1CE6E93ull)), counter_(0) {}

    std::uint64_t next_u64() { return at(counter_++); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

    /// Standard normal via Box-Muller; consumes two counters per pair.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1], u2 in [0,1)
        const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = double(next_u64() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t at(std::uint64_t i) const {
        std::uint64_t z = seed_ + (i + 1) * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace estalg
