#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rkhsid/kernel.hpp"
#include "rkhsid/quadrature.hpp"
#include "rkhsid/rkhs.hpp"
#include "rkhsid/signal.hpp"
#include "rkhsid/time.hpp"

namespace rkhsid {

struct ConvolutionValue {
    double value = 0.0;
    double error_bound = 0.0;  // quadrature estimate; zero for exact discrete sums
};

namespace detail {

// Breakpoints of s -> u(tau - s) restricted to s in [0, s_max]: the reflected
// knots plus the interval ends, ascending and deduplicated.
inline std::vector<double> reflected_breakpoints(const Signal& u, double tau, double s_max) {
    std::vector<double> pts{0.0, s_max};
    for (double k : u.knots()) {
        const double s = tau - k;
        if (s > 0.0 && s < s_max) pts.push_back(s);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace detail

// Value of the convolution functional: sum_{s in Z+} g_s u_{tau-s} for
// discrete time (an exact finite sum, since the input table is finite), or
// the quadrature of int g_s u_{tau-s} ds for continuous time.
inline ConvolutionValue convolve_detailed(const Signal& u, double tau, const RkhsElement& g,
                                          double quad_tol = 1e-11) {
    const auto& k = g.kernel();
    if (u.domain() != k.domain())
        throw std::invalid_argument("convolve: signal and kernel domains differ");
    require_valid_time(k.domain(), tau, "convolve");

    ConvolutionValue out;
    if (k.domain() == TimeDomain::Discrete) {
        const auto t = static_cast<std::int64_t>(tau);
        const std::int64_t s_lo = std::max<std::int64_t>(0, t - u.last_index());
        const std::int64_t s_hi = t - u.first_index();
        KahanSum sum;
        for (std::int64_t s = s_lo; s <= s_hi; ++s) {
            const double us = u.value(static_cast<double>(t - s));
            if (us != 0.0) sum.add(g.evaluate(static_cast<double>(s)) * us);
        }
        out.value = sum.value();
        return out;
    }

    if (g.is_zero() || u.knots().empty()) return out;
    const double s_max = tau - u.knots().front();
    if (s_max <= 0.0) return out;

    auto pts = detail::reflected_breakpoints(u, tau, s_max);
    // Split at atom centers too: the kernel may have a ridge there.
    for (const auto& a : g.atoms())
        if (a.center > 0.0 && a.center < s_max) pts.push_back(a.center);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    KahanSum sum;
    const double seg_tol = quad_tol / static_cast<double>(pts.size());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i], b = pts[i + 1];
        const double c = u.value(tau - 0.5 * (a + b));
        if (c == 0.0) continue;
        const auto q =
            integrate_1d([&](double s) { return g.evaluate(s); }, a, b, seg_tol);
        sum.add(c * q.value);
        out.error_bound += std::abs(c) * q.error_estimate;
    }
    out.value = sum.value();
    return out;
}

inline double convolve(const Signal& u, double tau, const RkhsElement& g) {
    return convolve_detailed(u, tau, g).value;
}

// Riesz representer of the convolution functional at tau: the element with
// convolve(u, tau, g) = <representer, g>. Centers never extend past
// truncation_horizon; tail_bound bounds the norm of what truncation dropped.
struct Representer {
    double tau = 0.0;
    RkhsElement element;
    double truncation_horizon = 0.0;
    double tail_bound = 0.0;
};

inline double operator_norm(const Representer& r) { return norm(r.element); }

// phi_tau,t = sum_s k(t,s) u_{tau-s}  (or the integral analogue). Finite
// input support keeps the discrete sum exact; supports reaching past the
// truncation horizon are cut where the kernel's corner tail mass, scaled by
// ||u||_inf^2, drops below tail_tol^2.
inline Representer representer_phi(const KernelDescriptor& k, const Signal& u, double tau,
                                   double tail_tol = 1e-8, int level = 10) {
    if (u.domain() != k.domain())
        throw std::invalid_argument("representer: signal and kernel domains differ");
    require_valid_time(k.domain(), tau, "representer");
    if (!(tail_tol > 0.0)) throw std::invalid_argument("representer: tail_tol must be positive");

    Representer rep{tau, RkhsElement(k), 0.0, 0.0};
    const double sup = u.sup_norm();
    if (sup == 0.0) return rep;

    if (k.domain() == TimeDomain::Discrete) {
        const auto t = static_cast<std::int64_t>(tau);
        const std::int64_t s_lo = std::max<std::int64_t>(0, t - u.last_index());
        std::int64_t s_hi = t - u.first_index();
        if (s_hi < s_lo) return rep;

        // Long supports: truncate by the tail rule; short ones stay exact.
        if (s_hi - s_lo > 512) {
            try {
                const auto [h, corner] =
                    find_truncation_horizon(k, sup * sup, tail_tol * tail_tol);
                if (h < static_cast<double>(s_hi)) {
                    s_hi = std::max(s_lo, static_cast<std::int64_t>(h));
                    rep.tail_bound = sup * std::sqrt(corner);
                }
            } catch (const divergence_suspected&) {
                // The exact finite sum still exists; keep it.
            }
        }
        std::vector<Atom> atoms;
        atoms.reserve(static_cast<std::size_t>(s_hi - s_lo + 1));
        for (std::int64_t s = s_lo; s <= s_hi; ++s) {
            const double w = u.value(static_cast<double>(t - s));
            if (w != 0.0) atoms.push_back({w, static_cast<double>(s)});
        }
        rep.element = RkhsElement(k, std::move(atoms));
        rep.truncation_horizon = static_cast<double>(s_hi);
        return rep;
    }

    double s_max = tau - u.knots().front();
    if (s_max <= 0.0) return rep;
    const auto [h, corner] = find_truncation_horizon(k, sup * sup, tail_tol * tail_tol);
    if (h < s_max) {
        s_max = h;
        rep.tail_bound = sup * std::sqrt(corner);
    }
    std::vector<Atom> atoms;
    const auto pts = detail::reflected_breakpoints(u, tau, s_max);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i], b = pts[i + 1];
        const double c = u.value(tau - 0.5 * (a + b));
        if (c == 0.0) continue;
        const auto piece = section_integral(k, a, b, level);
        for (const auto& atom : piece.atoms()) atoms.push_back({c * atom.weight, atom.center});
    }
    rep.element = RkhsElement(k, std::move(atoms));
    rep.truncation_horizon = s_max;
    return rep;
}

}  // namespace rkhsid
