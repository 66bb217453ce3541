#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace m3a {

using RngEngine = std::mt19937_64;

// Uniform double in the open interval (0,1). The bit-to-double mapping is
// fixed here rather than delegated to std::uniform_real_distribution, whose
// algorithm is implementation-defined; every sampler in this library must
// reproduce byte-identical streams for a given seed on any platform.
inline double uniform01(RngEngine& rng) {
    for (;;) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u > 0.0 && u < 1.0) return u;
    }
}

// Standard exponential via inversion.
inline double exponential1(RngEngine& rng) {
    return -std::log(uniform01(rng));
}

// Standard normal via Box-Muller (one value per call; the second root is
// discarded to keep the draw count per event fixed).
inline double normal01(RngEngine& rng) {
    const double u = uniform01(rng);
    const double v = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925287 * v);
}

// splitmix64 finalizer; used to derive decorrelated stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a 64-bit. std::hash is implementation-defined, so per-user seeds are
// derived with an explicitly pinned hash instead.
inline std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    return mix_seed(base ^ hash_string(tag));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return mix_seed(base ^ mix_seed(salt));
}

}  // namespace m3a
