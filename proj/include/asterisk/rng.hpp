#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace asterisk {

// Every random stream in the project flows from one of these. The generator
// below is fixed (not std::mt19937, whose distributions vary across standard
// library implementations) so a seed means the same numbers everywhere.
struct rng_seed {
    uint64_t value = 0;
};

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace detail

// Fixed fan-out: sub-systems get independent streams from one root seed.
inline rng_seed derive_seed(rng_seed root, std::string_view role, uint64_t index = 0) {
    uint64_t state = root.value ^ detail::fnv1a(role);
    state += 0x9E3779B97F4A7C15ull * (index + 1);
    detail::splitmix64(state);
    return rng_seed{detail::splitmix64(state)};
}

// xoshiro256** 1.0 (Blackman & Vigna), seeded via splitmix64.
class xoshiro256 {
public:
    explicit xoshiro256(rng_seed seed) {
        uint64_t sm = seed.value;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Unbiased integer in [0, n).
    uint64_t next_below(uint64_t n) {
        const uint64_t threshold = -n % n;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the spare is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace asterisk
