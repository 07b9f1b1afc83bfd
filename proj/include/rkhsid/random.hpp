#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rkhsid {

// Deterministic random source with a fully specified mapping from seed to
// stream: MT19937-64 raw draws, uniforms via the top 53 bits, normals via the
// Box-Muller transform. Same seed, same stream, on every platform (the
// standard distributions are implementation-defined, so we do not use them).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal, Box-Muller; consumes two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Fair sign, +1 or -1.
    int sign() { return (engine_() >> 63) ? 1 : -1; }

    // Uniform integer in [lo, hi] by rejection-free modular draw; bias is
    // negligible for the small ranges used here.
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(engine_() % span);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace rkhsid
