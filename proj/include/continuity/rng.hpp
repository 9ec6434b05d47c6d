#pragma once

#include <cstdint>

namespace continuity {

// Counter-based pseudo-random generator (splitmix64 output function over
// seed + counter * golden-ratio increment).  Every draw depends only on
// (seed, counter), so streams are reproducible across platforms and can
// be split by seed without sharing state.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed), counter_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

}  // namespace continuity
