#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

// Counter-based deterministic random streams. Every draw is a pure function
// of (seed, tag, counter), so results are independent of evaluation order and
// safe to use from the multi-threaded pipeline. No global RNG state anywhere.

namespace ugrasp::rng {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t mix(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

inline uint64_t key_for(uint64_t seed, std::string_view tag, uint64_t index = 0) {
    return mix(mix(seed, fnv1a(tag)), index);
}

inline uint64_t u64_at(uint64_t key, uint64_t counter) { return splitmix64(key ^ (counter * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL)); }

// Uniform in [0, 1).
inline double u01_from(uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

inline double uniform_at(uint64_t seed, std::string_view tag, uint64_t i) {
    return u01_from(u64_at(key_for(seed, tag), i));
}

// One standard normal per counter (Box-Muller, cosine branch).
inline double normal_at(uint64_t seed, std::string_view tag, uint64_t i) {
    const uint64_t key = key_for(seed, tag);
    double u1 = u01_from(u64_at(key, 2 * i));
    double u2 = u01_from(u64_at(key, 2 * i + 1));
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Sequential stream over the same keyed counter space.
class Stream {
public:
    Stream(uint64_t seed, std::string_view tag, uint64_t index = 0)
        : key_(key_for(seed, tag, index)) {}

    uint64_t next_u64() { return u64_at(key_, counter_++); }

    double u01() { return u01_from(next_u64()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Inclusive range.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(u01() * (static_cast<double>(hi) - lo + 1.0));
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = u01();
        double u2 = u01();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return u01() < p; }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ugrasp::rng
