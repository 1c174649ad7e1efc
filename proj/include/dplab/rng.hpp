#pragma once

#include <cstdint>
#include <cmath>

namespace dplab {

// Counter-based generators. Every random quantity in the lab is a pure
// function of (seed, counters...), so ensembles are reproducible and
// lattice sites shared between differently shaped boxes draw identical
// values. We deliberately avoid std:: distributions, whose outputs are
// not pinned by the standard.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Uniform in [0, 1).
inline double uniform01(std::uint64_t key) {
    return static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
}

// Key builder for multi-index draws: seed, then any number of counters.
struct RngKey {
    std::uint64_t state;

    explicit RngKey(std::uint64_t seed) : state(splitmix64(seed)) {}
    RngKey with(std::uint64_t counter) const {
        RngKey k(*this);
        k.state = hash_combine(k.state, counter);
        return k;
    }
    RngKey with_signed(std::int64_t counter) const {
        return with(static_cast<std::uint64_t>(counter));
    }
    double uniform() const { return uniform01(state); }
    // Standard normal via Box-Muller on two decorrelated substreams.
    double normal() const {
        double u1 = uniform01(hash_combine(state, 0x5bf0363546069941ULL));
        double u2 = uniform01(hash_combine(state, 0xd1b54a32d192ed03ULL));
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }
    bool coin() const { return (splitmix64(state) & 1ULL) != 0; }
};

}  // namespace dplab
