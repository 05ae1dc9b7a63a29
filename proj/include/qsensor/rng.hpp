#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qsensor {

// splitmix64 mixing step; used to derive child seeds from (master, class, index)
// so that every sample is reproducible in isolation.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b)
{
    std::uint64_t h = mix64(master);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    return h;
}

// Seeded generator with hand-rolled distributions. std::mt19937_64's raw
// stream is pinned by the standard, but the std distributions are not;
// rolling our own keeps datasets bit-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // uniform in [0, 1)
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (one value per call, partner discarded)
    double gaussian()
    {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double gaussian(double sigma) { return sigma * gaussian(); }

private:
    std::mt19937_64 engine_;
};

} // namespace qsensor
