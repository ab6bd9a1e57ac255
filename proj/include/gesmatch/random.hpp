#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gesmatch {

/// Seeded generator whose draws do not depend on the standard library's
/// distribution implementations, so results match across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        if (n == 0) {
            return 0;
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 engine_;
};

inline double Rng::normal()
{
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace gesmatch
