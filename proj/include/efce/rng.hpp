#pragma once

#include <cstdint>

namespace efce {

// Counter-based pseudo randomness. Everything downstream (scenarios, lazy
// strategy fills, MH chains, grid payoff matrices) derives from seeded hashes
// so runs are reproducible bit-for-bit across platforms. No <random> engines:
// their stream layouts are implementation defined.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_mix(uint64_t seed, uint64_t v) {
    return splitmix64(seed ^ splitmix64(v));
}

inline uint64_t hash_mix(uint64_t seed, uint64_t a, uint64_t b) {
    return hash_mix(hash_mix(seed, a), b);
}

inline uint64_t hash_mix(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    return hash_mix(hash_mix(seed, a, b), c);
}

// Uniform double in [0, 1) with 53 random bits.
inline double u01(uint64_t bits) { return double(bits >> 11) * 0x1.0p-53; }

// Sequential deterministic stream for chain randomness.
class SeedStream {
   public:
    explicit SeedStream(uint64_t seed) : state_(splitmix64(seed ^ 0x5bf03635d1f4bb31ULL)) {}

    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    double uniform01() { return u01(next()); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return next() % n; }

   private:
    uint64_t state_;
};

}  // namespace efce
