#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sinkflow::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based stream: the draw for (seed, step, particle, lane) does not depend on
// how particles are split across threads.
inline std::uint64_t key(std::uint64_t seed, std::uint64_t step, std::uint64_t particle,
                         std::uint64_t lane) {
    return splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ step) ^ particle) ^ lane);
}

// uniform on (0, 1]
inline double unit(std::uint64_t k) {
    return (static_cast<double>(k >> 11) + 1.0) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t step, std::uint64_t particle,
                      std::uint64_t lane = 0) {
    return unit(key(seed, step, particle, lane));
}

inline double normal(std::uint64_t seed, std::uint64_t step, std::uint64_t particle) {
    const double u1 = unit(key(seed, step, particle, 1));
    const double u2 = unit(key(seed, step, particle, 2));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace sinkflow::rng
