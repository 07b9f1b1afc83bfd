#pragma once

#include <stdexcept>
#include <string>

namespace rkhsid {

// Raised when a tail/partial-sum computation fails to settle before its
// horizon. Carries the last partial value so callers can report it.
class divergence_suspected : public std::runtime_error {
public:
    divergence_suspected(const std::string& what, double partial_value, double horizon)
        : std::runtime_error(what), partial_value_(partial_value), horizon_(horizon) {}

    double partial_value() const { return partial_value_; }
    double horizon() const { return horizon_; }

private:
    double partial_value_;
    double horizon_;
};

class numerical_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rkhsid
