#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace rkhsid {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::int64_t evaluations = 0;
};

namespace detail {

// One adaptive-Simpson split. f is assumed bounded on [a,b].
template <class F>
void simpson_recurse(const F& f, double a, double fa, double b, double fb, double m, double fm,
                     double whole, double tol, int depth, QuadResult& out) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    out.evaluations += 2;
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        out.value += left + right + delta / 15.0;
        out.error_estimate += std::abs(delta) / 15.0;
        return;
    }
    simpson_recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, out);
    simpson_recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

// Adaptive Simpson on [a,b] with absolute tolerance.
template <class F>
QuadResult integrate_1d(const F& f, double a, double b, double abs_tol, int max_depth = 40) {
    QuadResult out;
    if (!(b > a)) return out;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    out.evaluations = 3;
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    detail::simpson_recurse(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth, out);
    return out;
}

// Tensor-product trapezoid on a uniform ladder of doubling grids with a
// Richardson (Romberg) extrapolation table; stops when successive
// extrapolated values agree to the relative tolerance. The grid-aligned
// diagonal ridge of max-type kernels refines self-similarly, so its h^2
// error term extrapolates away like the smooth one.
template <class F>
QuadResult integrate_2d(const F& f, double ax, double bx, double ay, double by, double rel_tol,
                        double abs_floor = 1e-14, int max_level = 11) {
    QuadResult out;
    if (!(bx > ax) || !(by > ay)) return out;

    std::vector<std::vector<double>> table;
    double prev_best = 0.0;
    for (int level = 0; level <= max_level; ++level) {
        const std::int64_t n = std::int64_t{1} << level;
        const double hx = (bx - ax) / static_cast<double>(n);
        const double hy = (by - ay) / static_cast<double>(n);
        double sum = 0.0;
        double carry = 0.0;
        for (std::int64_t i = 0; i <= n; ++i) {
            const double x = ax + static_cast<double>(i) * hx;
            const double wx = (i == 0 || i == n) ? 0.5 : 1.0;
            double row = 0.0;
            double row_carry = 0.0;
            for (std::int64_t j = 0; j <= n; ++j) {
                const double y = ay + static_cast<double>(j) * hy;
                const double wy = (j == 0 || j == n) ? 0.5 : 1.0;
                const double term = wx * wy * f(x, y);
                const double t1 = term - row_carry;
                const double t2 = row + t1;
                row_carry = (t2 - row) - t1;
                row = t2;
            }
            const double t1 = row - carry;
            const double t2 = sum + t1;
            carry = (t2 - sum) - t1;
            sum = t2;
        }
        out.evaluations += (n + 1) * (n + 1);

        table.emplace_back();
        table.back().push_back(hx * hy * sum);
        for (std::size_t j = 1; j <= static_cast<std::size_t>(level); ++j) {
            const double p = std::pow(4.0, static_cast<double>(j));
            table.back().push_back(
                (p * table.back()[j - 1] - table[table.size() - 2][j - 1]) / (p - 1.0));
        }
        const double best = table.back().back();
        if (level >= 3) {
            const double delta = std::abs(best - prev_best);
            out.value = best;
            out.error_estimate = delta;
            if (delta <= rel_tol * std::abs(best) + abs_floor) return out;
        }
        prev_best = best;
        out.value = best;
    }
    return out;
}

}  // namespace rkhsid
