#ifndef SARSIM_RNG_HPP
#define SARSIM_RNG_HPP

#include <cstdint>
#include <cstring>
#include <string_view>

#include "vec.hpp"

// Deterministic, platform-independent random streams. std::<distribution>s are
// implementation-defined, so everything here is hand-rolled on top of
// splitmix64; chip bytes must reproduce across runs and worker counts.

namespace sarsim {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

// order-sensitive mix of a seed with arbitrary parts; used for per-job and
// per-image stream derivation (master seed ^ index scheme)
inline std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t v) {
    std::uint64_t s = seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    return splitmix64(s);
}
inline std::uint64_t hash_mix(std::uint64_t seed, std::string_view s) {
    return hash_mix(seed, fnv1a64(s));
}
template <typename T, typename U, typename... Rest>
std::uint64_t hash_mix(std::uint64_t seed, T first, U second, Rest... rest) {
    return hash_mix(hash_mix(seed, first), second, rest...);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0,1)
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // uniform integer in [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi <= lo) return lo;
        std::uint64_t span = std::uint64_t(hi - lo) + 1;
        return lo + std::int64_t(next_u64() % span);
    }

    // Box-Muller; no cached spare so the stream layout is position-independent
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    cplx circular_gaussian(double power) {
        double s = std::sqrt(power / 2.0);
        return {s * normal(), s * normal()};
    }

    // mean-one Gamma(shape) via Marsaglia-Tsang, shape >= ~0.1
    double gamma_mean_one(double shape) {
        double d = shape - 1.0 / 3.0;
        if (d <= 0) d = 1e-3;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0) continue;
            v = v * v * v;
            double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / shape;
            if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / shape;
        }
    }

private:
    std::uint64_t state_;
};

} // namespace sarsim

#endif
