#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkhsid/kernel.hpp"
#include "rkhsid/time.hpp"

namespace rkhsid {

struct Atom {
    double weight = 0.0;
    double center = 0.0;
};

// A finite combination of kernel sections, sum_i w_i * k(., c_i). Everything
// the constructions here need (sections, their weighted sums, Riemann
// approximants of section integrals) lives in such finite spans. Atoms are
// kept sorted by center and merged when centers coincide.
class RkhsElement {
public:
    explicit RkhsElement(KernelDescriptor kernel) : kernel_(std::move(kernel)) {}

    RkhsElement(KernelDescriptor kernel, std::vector<Atom> atoms) : kernel_(std::move(kernel)) {
        for (const auto& a : atoms) require_valid_time(kernel_.domain(), a.center, "rkhs element");
        atoms_ = coalesce(std::move(atoms));
    }

    const KernelDescriptor& kernel() const { return kernel_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    bool is_zero() const { return atoms_.empty(); }

    double evaluate(double t) const {
        require_valid_time(kernel_.domain(), t, "rkhs evaluate");
        KahanSum sum;
        for (const auto& a : atoms_) sum.add(a.weight * kernel_.eval_unchecked(t, a.center));
        return sum.value();
    }

    RkhsElement scaled(double alpha) const {
        std::vector<Atom> atoms = atoms_;
        for (auto& a : atoms) a.weight *= alpha;
        RkhsElement out(kernel_);
        out.atoms_ = std::move(atoms);  // already sorted/coalesced
        return out;
    }

    friend RkhsElement operator+(const RkhsElement& a, const RkhsElement& b) {
        if (a.kernel_ != b.kernel_)
            throw std::invalid_argument("rkhs elements live in different spaces");
        std::vector<Atom> atoms = a.atoms_;
        atoms.insert(atoms.end(), b.atoms_.begin(), b.atoms_.end());
        RkhsElement out(a.kernel_);
        out.atoms_ = coalesce(std::move(atoms));
        return out;
    }

    friend RkhsElement operator-(const RkhsElement& a, const RkhsElement& b) {
        return a + b.scaled(-1.0);
    }

    static std::vector<Atom> coalesce(std::vector<Atom> atoms) {
        std::sort(atoms.begin(), atoms.end(),
                  [](const Atom& x, const Atom& y) { return x.center < y.center; });
        std::vector<Atom> out;
        out.reserve(atoms.size());
        for (const auto& a : atoms) {
            if (!out.empty() && out.back().center == a.center) {
                out.back().weight += a.weight;
            } else {
                out.push_back(a);
            }
        }
        return out;
    }

private:
    KernelDescriptor kernel_;
    std::vector<Atom> atoms_;
};

inline RkhsElement section(const KernelDescriptor& k, double t) {
    require_valid_time(k.domain(), t, "section");
    return RkhsElement(k, {{1.0, t}});
}

inline double inner(const RkhsElement& e1, const RkhsElement& e2) {
    if (e1.kernel() != e2.kernel())
        throw std::invalid_argument("inner: elements live in different spaces");
    const auto& k = e1.kernel();
    KahanSum sum;
    for (const auto& a : e1.atoms())
        for (const auto& b : e2.atoms())
            sum.add(a.weight * b.weight * k.eval_unchecked(a.center, b.center));
    return sum.value();
}

inline double norm(const RkhsElement& e) { return std::sqrt(std::max(0.0, inner(e, e))); }

// Left-endpoint dyadic Riemann approximant of the section integral over
// [lo,hi]: 2^level atoms at lo + i*delta with weight delta = (hi-lo)/2^level.
inline RkhsElement section_integral(const KernelDescriptor& k, double lo, double hi, int level) {
    if (k.domain() != TimeDomain::Continuous)
        throw std::invalid_argument("section_integral: continuous-domain kernels only");
    if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi))
        throw std::invalid_argument("section_integral: need 0 <= lo < hi < inf");
    if (level < 0) throw std::invalid_argument("section_integral: level must be >= 0");
    if (level > 22) throw std::invalid_argument("section_integral: level too large");
    const std::int64_t n = std::int64_t{1} << level;
    const double delta = (hi - lo) / static_cast<double>(n);
    std::vector<Atom> atoms(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        atoms[static_cast<std::size_t>(i)] = {delta, lo + static_cast<double>(i) * delta};
    return RkhsElement(k, std::move(atoms));
}

constexpr double kUnboundedTime = std::numeric_limits<double>::infinity();

// Sum of sections over lo..hi. An infinite hi is truncated at the first
// horizon whose corner tail mass drops below tail_tol^2, mirroring the
// eps-argument that makes the infinite sum well-defined.
inline RkhsElement section_sum(const KernelDescriptor& k, double lo, double hi,
                               double tail_tol = 1e-8) {
    if (k.domain() != TimeDomain::Discrete)
        throw std::invalid_argument("section_sum: discrete-domain kernels only");
    require_valid_time(TimeDomain::Discrete, lo, "section_sum");
    double top = hi;
    if (std::isinf(hi)) {
        if (!(tail_tol > 0.0)) throw std::invalid_argument("section_sum: tail_tol must be positive");
        top = std::max(lo, find_truncation_horizon(k, 1.0, tail_tol * tail_tol).first);
    } else {
        require_valid_time(TimeDomain::Discrete, hi, "section_sum");
        if (hi < lo) throw std::invalid_argument("section_sum: need lo <= hi");
    }
    std::vector<Atom> atoms;
    for (double t = lo; t <= top; t += 1.0) atoms.push_back({1.0, t});
    return RkhsElement(k, std::move(atoms));
}

// CSV form: weight,center rows under a kernel-descriptor comment block.
inline void write_element_csv(const std::string& path, const RkhsElement& e) {
    std::vector<std::string> comments;
    for (const auto& [key, val] : e.kernel().describe())
        comments.push_back("# kernel " + key + " = " + val);
    std::vector<std::vector<double>> rows;
    for (const auto& a : e.atoms()) rows.push_back({a.weight, a.center});
    write_csv(path, {"weight", "center"}, rows, comments);
}

inline RkhsElement read_element_csv(const std::string& path) {
    const CsvTable csv = read_csv(path);
    if (csv.header != std::vector<std::string>{"weight", "center"})
        throw std::invalid_argument(path + ": element CSV must have header weight,center");
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& c : csv.comments) {
        const std::string tag = "# kernel ";
        if (c.rfind(tag, 0) != 0) continue;
        const auto eq = c.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e2 = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e2 - b + 1);
        };
        kv.emplace_back(trim(c.substr(tag.size(), eq - tag.size())), trim(c.substr(eq + 1)));
    }
    const KernelDescriptor k = kernel_from_description(kv, path);
    std::vector<Atom> atoms;
    for (const auto& row : csv.rows) {
        if (row.size() != 2)
            throw std::invalid_argument(path + ": element rows must be weight,center");
        atoms.push_back({row[0], row[1]});
    }
    return RkhsElement(k, std::move(atoms));
}

}  // namespace rkhsid
