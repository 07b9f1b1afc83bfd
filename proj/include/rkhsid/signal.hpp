#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkhsid/csv.hpp"
#include "rkhsid/time.hpp"

namespace rkhsid {

// A bounded input or output record. Discrete signals are a finite table of
// samples over a contiguous (possibly two-sided) index window, zero outside
// it. Continuous signals are piecewise constant: value_i holds on
// [knot_i, knot_{i+1}), the last value extends past the final knot, and the
// signal is zero before the first knot.
class Signal {
public:
    static Signal discrete(std::int64_t first_index, std::vector<double> samples) {
        Signal s;
        s.domain_ = TimeDomain::Discrete;
        s.first_index_ = first_index;
        s.samples_ = std::move(samples);
        for (double v : s.samples_)
            if (!std::isfinite(v)) throw std::invalid_argument("signal samples must be finite");
        s.sup_norm_ = 0.0;
        for (double v : s.samples_) s.sup_norm_ = std::max(s.sup_norm_, std::abs(v));
        return s;
    }

    static Signal piecewise_constant(std::vector<double> knots, std::vector<double> values) {
        if (knots.size() != values.size())
            throw std::invalid_argument("piecewise-constant signal: one value per knot");
        if (knots.empty())
            throw std::invalid_argument("piecewise-constant signal: need at least one knot");
        for (std::size_t i = 0; i < knots.size(); ++i) {
            if (!std::isfinite(knots[i]) || !std::isfinite(values[i]))
                throw std::invalid_argument("piecewise-constant signal: entries must be finite");
            if (i > 0 && !(knots[i] > knots[i - 1]))
                throw std::invalid_argument(
                    "piecewise-constant signal: knots must be strictly increasing");
        }
        Signal s;
        s.domain_ = TimeDomain::Continuous;
        s.knots_ = std::move(knots);
        s.knot_values_ = std::move(values);
        s.sup_norm_ = 0.0;
        for (double v : s.knot_values_) s.sup_norm_ = std::max(s.sup_norm_, std::abs(v));
        return s;
    }

    TimeDomain domain() const { return domain_; }
    double sup_norm() const { return sup_norm_; }

    double value(double t) const {
        if (domain_ == TimeDomain::Discrete) {
            if (std::floor(t) != t)
                throw std::invalid_argument("discrete signal queried at non-integer time");
            const auto i = static_cast<std::int64_t>(t);
            if (i < first_index_ ||
                i >= first_index_ + static_cast<std::int64_t>(samples_.size()))
                return 0.0;
            return samples_[static_cast<std::size_t>(i - first_index_)];
        }
        if (t < knots_.front()) return 0.0;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        return knot_values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
    }

    // Discrete accessors.
    std::int64_t first_index() const { return first_index_; }
    std::int64_t last_index() const {
        return first_index_ + static_cast<std::int64_t>(samples_.size()) - 1;
    }
    const std::vector<double>& samples() const { return samples_; }

    // Continuous accessors.
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& knot_values() const { return knot_values_; }

private:
    Signal() = default;
    TimeDomain domain_ = TimeDomain::Discrete;
    std::int64_t first_index_ = 0;
    std::vector<double> samples_;
    std::vector<double> knots_;
    std::vector<double> knot_values_;
    double sup_norm_ = 0.0;
};

inline void write_signal_csv(const std::string& path, const Signal& s) {
    std::vector<std::vector<double>> rows;
    if (s.domain() == TimeDomain::Discrete) {
        for (std::size_t i = 0; i < s.samples().size(); ++i)
            rows.push_back({static_cast<double>(s.first_index() + static_cast<std::int64_t>(i)),
                            s.samples()[i]});
        write_csv(path, {"index", "value"}, rows);
    } else {
        for (std::size_t i = 0; i < s.knots().size(); ++i)
            rows.push_back({s.knots()[i], s.knot_values()[i]});
        write_csv(path, {"knot_time", "value"}, rows);
    }
}

inline Signal read_signal_csv(const std::string& path) {
    const CsvTable csv = read_csv(path);
    if (csv.header == std::vector<std::string>{"index", "value"}) {
        if (csv.rows.empty()) return Signal::discrete(0, {});
        std::vector<std::pair<std::int64_t, double>> entries;
        for (const auto& row : csv.rows) {
            if (row.size() != 2 || std::floor(row[0]) != row[0])
                throw std::invalid_argument(path + ": discrete signal rows must be integer,value");
            entries.emplace_back(static_cast<std::int64_t>(row[0]), row[1]);
        }
        std::sort(entries.begin(), entries.end());
        const std::int64_t lo = entries.front().first;
        const std::int64_t hi = entries.back().first;
        std::vector<double> samples(static_cast<std::size_t>(hi - lo) + 1, 0.0);
        for (const auto& [i, v] : entries) samples[static_cast<std::size_t>(i - lo)] = v;
        return Signal::discrete(lo, std::move(samples));
    }
    if (csv.header == std::vector<std::string>{"knot_time", "value"}) {
        std::vector<double> knots, values;
        for (const auto& row : csv.rows) {
            if (row.size() != 2)
                throw std::invalid_argument(path + ": continuous signal rows must be knot,value");
            knots.push_back(row[0]);
            values.push_back(row[1]);
        }
        return Signal::piecewise_constant(std::move(knots), std::move(values));
    }
    throw std::invalid_argument(path + ": expected header index,value or knot_time,value");
}

}  // namespace rkhsid
