#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rkhsid {

// Time axis of a signal or kernel: non-negative integers or non-negative reals.
enum class TimeDomain { Discrete, Continuous };

inline const char* to_string(TimeDomain d) {
    return d == TimeDomain::Discrete ? "discrete" : "continuous";
}

inline bool is_valid_time(TimeDomain domain, double t) {
    if (!std::isfinite(t) || t < 0.0) return false;
    if (domain == TimeDomain::Discrete) return std::floor(t) == t;
    return true;
}

inline void require_valid_time(TimeDomain domain, double t, const char* where) {
    if (!is_valid_time(domain, t)) {
        throw std::invalid_argument(std::string(where) + ": time " + std::to_string(t) +
                                    " is not valid for the " + to_string(domain) + " domain");
    }
}

// Kahan compensated accumulator. Fixed summation order keeps results
// deterministic regardless of how callers batch their work.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace rkhsid
