#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkhsid/convolution.hpp"
#include "rkhsid/csv.hpp"
#include "rkhsid/errors.hpp"
#include "rkhsid/kernel.hpp"
#include "rkhsid/quadrature.hpp"
#include "rkhsid/random.hpp"
#include "rkhsid/rkhs.hpp"
#include "rkhsid/signal.hpp"

namespace rkhsid {

// One observed-versus-bound comparison inside a check. margin >= 0 passes.
struct BoundRow {
    std::string label;
    double observed = 0.0;
    double bound = 0.0;
    double margin = 0.0;
};

struct CheckReport {
    std::string check_name;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<BoundRow> rows;
    std::vector<std::pair<std::string, double>> observations;  // informational
    bool pass = false;
    double worst_margin = std::numeric_limits<double>::infinity();
    std::string note;

    void add_row(std::string label, double observed, double bound) {
        const double margin = bound - observed;
        rows.push_back({std::move(label), observed, bound, margin});
        worst_margin = std::min(worst_margin, margin);
    }
    void finalize() {
        pass = true;
        for (const auto& r : rows) pass = pass && r.margin >= 0.0;
        if (rows.empty()) worst_margin = 0.0;
    }
};

inline std::string parameter_hash(const std::vector<std::pair<std::string, std::string>>& params) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= ';';
        h *= 1099511628211ull;
    };
    for (const auto& [k, v] : params) {
        mix(k);
        mix(v);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace detail {

inline void describe_kernel_into(const KernelDescriptor& k,
                                 std::vector<std::pair<std::string, std::string>>& params) {
    for (const auto& [key, val] : k.describe()) params.emplace_back("kernel." + key, val);
}

// Pairwise kernel sums between all nested dyadic grids over [lo,hi]:
// result[a][b] = sum over level-a and level-b grid points of k. Level-a grid
// points are every 2^(L-a)-th point of the finest grid, so one triangular
// pass over the finest grid covers every pair of levels at once.
inline std::vector<std::vector<double>> nested_grid_pair_sums(const KernelDescriptor& k,
                                                              double lo, double hi, int finest) {
    const std::int64_t n = std::int64_t{1} << finest;
    const double delta = (hi - lo) / static_cast<double>(n);
    std::vector<double> pts(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j)
        pts[static_cast<std::size_t>(j)] = lo + static_cast<double>(j) * delta;
    const GridKernelCache cache(k, std::move(pts));

    const int levels = finest + 1;
    auto min_level = [&](std::int64_t j) {
        return j == 0 ? 0 : finest - std::countr_zero(static_cast<std::uint64_t>(j));
    };

    // strict[a][b] accumulates pairs i<j binned at their minimal levels;
    // diag[a] likewise for i==j.
    std::vector<std::vector<KahanSum>> strict(static_cast<std::size_t>(levels),
                                              std::vector<KahanSum>(static_cast<std::size_t>(levels)));
    std::vector<KahanSum> diag(static_cast<std::size_t>(levels));

    std::vector<KahanSum> row(static_cast<std::size_t>(levels));
    for (std::int64_t i = 0; i < n; ++i) {
        const int li = min_level(i);
        for (auto& acc : row) acc = KahanSum{};
        for (std::int64_t j = i + 1; j < n; ++j)
            row[static_cast<std::size_t>(min_level(j))].add(
                cache(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
        for (int b = 0; b < levels; ++b)
            strict[static_cast<std::size_t>(li)][static_cast<std::size_t>(b)].add(
                row[static_cast<std::size_t>(b)].value());
        diag[static_cast<std::size_t>(li)].add(
            cache(static_cast<std::size_t>(i), static_cast<std::size_t>(i)));
    }

    // Prefix over minimal levels: S[a][b] = sum of strict bins up to (a,b).
    std::vector<std::vector<double>> s(static_cast<std::size_t>(levels),
                                       std::vector<double>(static_cast<std::size_t>(levels), 0.0));
    std::vector<double> d(static_cast<std::size_t>(levels), 0.0);
    double dcum = 0.0;
    for (int a = 0; a < levels; ++a) {
        dcum += diag[static_cast<std::size_t>(a)].value();
        d[static_cast<std::size_t>(a)] = dcum;
        for (int b = 0; b < levels; ++b) {
            double v = strict[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].value();
            if (a > 0) v += s[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b)];
            if (b > 0) v += s[static_cast<std::size_t>(a)][static_cast<std::size_t>(b - 1)];
            if (a > 0 && b > 0)
                v -= s[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)];
            s[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = v;
        }
    }

    std::vector<std::vector<double>> m(static_cast<std::size_t>(levels),
                                       std::vector<double>(static_cast<std::size_t>(levels), 0.0));
    for (int a = 0; a < levels; ++a)
        for (int b = 0; b < levels; ++b)
            m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
                s[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +
                s[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] +
                d[static_cast<std::size_t>(std::min(a, b))];
    return m;
}

}  // namespace detail

// Convergence of the absolute kernel mass over growing squares. Failure is a
// verdict, not an exception.
inline CheckReport check_integrability(const KernelDescriptor& k, double tail_tol,
                                       double max_horizon) {
    CheckReport report;
    report.check_name = "integrability";
    detail::describe_kernel_into(k, report.parameters);
    report.parameters.emplace_back("tail_tol", format_number(tail_tol));
    report.parameters.emplace_back("max_horizon", format_number(max_horizon));

    const IntegrabilityProfile profile = integrability_profile(k, tail_tol, max_horizon);
    report.observations.emplace_back("measure", profile.value());
    report.observations.emplace_back("horizon", profile.horizon());
    for (std::size_t i = 0; i < profile.partial_sums.size(); ++i)
        report.observations.emplace_back("partial_sum_h" + format_number(profile.horizons[i]),
                                         profile.partial_sums[i]);
    if (profile.converged) {
        report.add_row("last doubling delta", std::abs(profile.last_delta), tail_tol);
    } else {
        report.add_row("last doubling delta (horizon exhausted)", std::abs(profile.last_delta),
                       tail_tol);
        report.note = "divergence suspected: partial sums still moving at max horizon";
    }
    report.finalize();
    return report;
}

// Partial sums of sum_t |sum_s u_s k(t,s)| for each probe input. Convergence
// of finitely many probes is evidence, not a proof over all bounded inputs.
inline CheckReport check_stability_probe(const KernelDescriptor& k,
                                         const std::vector<Signal>& inputs, double horizon,
                                         double tol) {
    if (k.domain() != TimeDomain::Discrete)
        throw std::invalid_argument("stability probe: discrete kernels only");
    CheckReport report;
    report.check_name = "stability_probe";
    detail::describe_kernel_into(k, report.parameters);
    report.parameters.emplace_back("horizon", format_number(horizon));
    report.parameters.emplace_back("tol", format_number(tol));
    report.parameters.emplace_back("probes", std::to_string(inputs.size()));
    report.note = "evidence only: finitely many bounded probes cannot decide stability";

    double measure = -1.0;
    try {
        measure = integrability_measure(k, tol, horizon);
    } catch (const divergence_suspected&) {
    }

    int idx = 0;
    for (const auto& u : inputs) {
        const std::string tag = "probe" + std::to_string(idx++);
        const std::int64_t s_hi = std::max<std::int64_t>(u.last_index(), 0);
        double prev = 0.0;
        double value = 0.0;
        double last_delta = std::numeric_limits<double>::infinity();
        for (std::int64_t h = 1; h <= static_cast<std::int64_t>(horizon); h *= 2) {
            KahanSum outer;
            for (std::int64_t t = 0; t <= h; ++t) {
                KahanSum innr;
                for (std::int64_t s = 0; s <= s_hi; ++s) {
                    const double us = u.value(static_cast<double>(s));
                    if (us != 0.0)
                        innr.add(us * k.eval_unchecked(static_cast<double>(t),
                                                       static_cast<double>(s)));
                }
                outer.add(std::abs(innr.value()));
            }
            value = outer.value();
            last_delta = std::abs(value - prev);
            if (h > 1 && last_delta < tol) break;
            prev = value;
        }
        report.observations.emplace_back(tag + "_value", value);
        report.add_row(tag + " doubling delta", last_delta, tol);
        if (measure >= 0.0) {
            report.add_row(tag + " dominated by kernel mass", value,
                           u.sup_norm() * measure * (1.0 + 1e-12) + 1e-15);
        }
    }
    report.finalize();
    return report;
}

// Refinement gaps of the dyadic Riemann approximants of the section integral
// over [lo,hi], plus the gap between the finest norm^2 and an independent
// quadrature of the double integral.
inline CheckReport check_dyadic_cauchy(const KernelDescriptor& k, double lo, double hi,
                                       int n_max, double gap_tol = 1e-4) {
    if (k.domain() != TimeDomain::Continuous)
        throw std::invalid_argument("dyadic refinement check: continuous kernels only");
    if (!(lo >= 0.0) || !(hi > lo))
        throw std::invalid_argument("dyadic refinement check: need 0 <= lo < hi");
    if (n_max < 0 || n_max > 16)
        throw std::invalid_argument("dyadic refinement check: n_max out of range");

    CheckReport report;
    report.check_name = "dyadic_cauchy";
    detail::describe_kernel_into(k, report.parameters);
    report.parameters.emplace_back("lo", format_number(lo));
    report.parameters.emplace_back("hi", format_number(hi));
    report.parameters.emplace_back("n_max", std::to_string(n_max));
    report.parameters.emplace_back("gap_tol", format_number(gap_tol));

    const auto m = detail::nested_grid_pair_sums(k, lo, hi, n_max + 1);
    auto q = [&](int a, int b) {
        const double da = (hi - lo) / static_cast<double>(std::int64_t{1} << a);
        const double db = (hi - lo) / static_cast<double>(std::int64_t{1} << b);
        return da * db * m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    };

    double d_last = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        const double gap2 = q(n + 1, n + 1) - 2.0 * q(n + 1, n) + q(n, n);
        d_last = std::sqrt(std::max(0.0, gap2));
        report.observations.emplace_back("refinement_gap_n" + std::to_string(n), d_last);
    }
    report.add_row("refinement gap at n_max", d_last, gap_tol);

    const auto oracle = integrate_2d([&](double s, double t) { return k.eval_unchecked(s, t); },
                                     lo, hi, lo, hi, 1e-8);
    const double norm2_finest = q(n_max, n_max);
    report.observations.emplace_back("norm_sq_at_n_max", norm2_finest);
    report.observations.emplace_back("double_integral_quadrature", oracle.value);
    report.add_row("norm identity gap at n_max", std::abs(norm2_finest - oracle.value), gap_tol);
    report.finalize();
    return report;
}

// Discrete partial sums f_n,t = sum_{s<=n} k(t,s) u_{tau-s}: every observed
// gap ||f_n - f_m|| must sit under ||u||_inf * sqrt(corner tail mass past m).
inline CheckReport check_partial_sum_cauchy(const KernelDescriptor& k, const Signal& u,
                                            double tau, int n_max) {
    if (k.domain() != TimeDomain::Discrete)
        throw std::invalid_argument("partial-sum check: discrete kernels only");
    require_valid_time(TimeDomain::Discrete, tau, "partial-sum check");

    CheckReport report;
    report.check_name = "partial_sum_cauchy";
    detail::describe_kernel_into(k, report.parameters);
    report.parameters.emplace_back("tau", format_number(tau));
    report.parameters.emplace_back("n_max", std::to_string(n_max));

    auto reflected = [&](std::int64_t s) { return u.value(tau - static_cast<double>(s)); };
    for (std::int64_t m = 4; 2 * m <= n_max; m *= 2) {
        const std::int64_t n = 2 * m;
        KahanSum gap2;
        for (std::int64_t s = m + 1; s <= n; ++s)
            for (std::int64_t t = m + 1; t <= n; ++t)
                gap2.add(k.eval_unchecked(static_cast<double>(s), static_cast<double>(t)) *
                         reflected(s) * reflected(t));
        const double observed = std::sqrt(std::max(0.0, gap2.value()));
        const double corner = tail_corner_mass(k, static_cast<double>(m), 1e-13);
        const double bound = u.sup_norm() * std::sqrt(corner);
        report.observations.emplace_back(
            "gap_m" + std::to_string(m) + "_n" + std::to_string(n), observed);
        report.add_row("gap m=" + std::to_string(m) + " n=" + std::to_string(n), observed,
                       bound * (1.0 + 1e-8));
    }
    report.finalize();
    return report;
}

// Sampled Riesz certificate: |L(g)| against (||phi|| + tail) * ||g|| and the
// duality gap |L(g) - <phi, g>| against tail_tol * ||g||.
inline CheckReport check_continuity_certificate(const KernelDescriptor& k, const Signal& u,
                                                double tau, int trial_count, std::uint64_t seed,
                                                double tail_tol = 1e-8, int level = 10) {
    CheckReport report;
    report.check_name = "continuity_certificate";
    detail::describe_kernel_into(k, report.parameters);
    report.parameters.emplace_back("tau", format_number(tau));
    report.parameters.emplace_back("trials", std::to_string(trial_count));
    report.parameters.emplace_back("seed", std::to_string(seed));
    report.parameters.emplace_back("tail_tol", format_number(tail_tol));

    const Representer rep = representer_phi(k, u, tau, tail_tol, level);
    const double op_norm = operator_norm(rep);
    // Dyadic discretization of a continuous representer: the refinement gaps
    // halve per level, so the distance to the exact representer is within
    // twice the last observed gap. Zero for discrete time (exact sums).
    double disc_bound = 0.0;
    if (k.domain() == TimeDomain::Continuous && level >= 1) {
        const Representer coarse = representer_phi(k, u, tau, tail_tol, level - 1);
        disc_bound = 2.0 * norm(rep.element - coarse.element);
    }
    report.observations.emplace_back("operator_norm", op_norm);
    report.observations.emplace_back("tail_bound", rep.tail_bound);
    report.observations.emplace_back("discretization_bound", disc_bound);

    Rng rng(seed);
    double worst_bound_margin = std::numeric_limits<double>::infinity();
    BoundRow worst_bound_row;
    double worst_dual_margin = std::numeric_limits<double>::infinity();
    BoundRow worst_dual_row;
    for (int trial = 0; trial < trial_count; ++trial) {
        const auto n_atoms = static_cast<int>(rng.integer(1, 10));
        std::vector<Atom> atoms;
        for (int i = 0; i < n_atoms; ++i) {
            double c;
            if (k.domain() == TimeDomain::Discrete) {
                c = static_cast<double>(rng.integer(0, std::max<std::int64_t>(
                                                           2 * static_cast<std::int64_t>(tau) + 20,
                                                           40)));
            } else {
                c = rng.uniform(0.0, tau + 10.0);
            }
            atoms.push_back({rng.uniform(-1.0, 1.0), c});
        }
        const RkhsElement g(k, std::move(atoms));
        const double g_norm = norm(g);
        const auto conv = convolve_detailed(u, tau, g);
        const double lg = conv.value;
        const double bound = (op_norm + rep.tail_bound + disc_bound) * g_norm * (1.0 + 1e-10) +
                             conv.error_bound;
        const double dual_gap = std::abs(lg - inner(rep.element, g));
        const double dual_bound =
            (tail_tol + disc_bound) * g_norm + 1e-10 + conv.error_bound;

        if (bound - std::abs(lg) < worst_bound_margin) {
            worst_bound_margin = bound - std::abs(lg);
            worst_bound_row = {"worst |L(g)| vs norm bound (trial " + std::to_string(trial) + ")",
                               std::abs(lg), bound, 0.0};
        }
        if (dual_bound - dual_gap < worst_dual_margin) {
            worst_dual_margin = dual_bound - dual_gap;
            worst_dual_row = {"worst duality gap (trial " + std::to_string(trial) + ")", dual_gap,
                              dual_bound, 0.0};
        }
    }
    report.add_row(worst_bound_row.label, worst_bound_row.observed, worst_bound_row.bound);
    report.add_row(worst_dual_row.label, worst_dual_row.observed, worst_dual_row.bound);
    report.finalize();
    return report;
}

struct TimeBox {
    double lo = 0.0;
    double hi = 1.0;
};

// Inner product of two section-integral approximants against the iterated
// double integrals over box1 x box2, both orders.
inline CheckReport check_fubini(const KernelDescriptor& k, TimeBox box1, TimeBox box2, int level,
                                double gap_tol = 1e-4) {
    if (k.domain() != TimeDomain::Continuous)
        throw std::invalid_argument("fubini check: continuous kernels only");
    CheckReport report;
    report.check_name = "fubini";
    detail::describe_kernel_into(k, report.parameters);
    report.parameters.emplace_back("box1", format_number(box1.lo) + ".." + format_number(box1.hi));
    report.parameters.emplace_back("box2", format_number(box2.lo) + ".." + format_number(box2.hi));
    report.parameters.emplace_back("level", std::to_string(level));

    const RkhsElement e1 = section_integral(k, box1.lo, box1.hi, level);
    const RkhsElement e2 = section_integral(k, box2.lo, box2.hi, level);
    const double ip12 = inner(e1, e2);
    const double ip21 = inner(e2, e1);

    const double inner_tol = 1e-11;
    auto iterated_tb = integrate_1d(
        [&](double t) {
            return integrate_1d([&](double s) { return k.eval_unchecked(t, s); }, box2.lo,
                                box2.hi, inner_tol)
                .value;
        },
        box1.lo, box1.hi, 1e-9);
    auto iterated_st = integrate_1d(
        [&](double s) {
            return integrate_1d([&](double t) { return k.eval_unchecked(t, s); }, box1.lo,
                                box1.hi, inner_tol)
                .value;
        },
        box2.lo, box2.hi, 1e-9);

    const double scale = std::max({1.0, std::abs(ip12), std::abs(iterated_tb.value)});
    report.observations.emplace_back("inner_product", ip12);
    report.observations.emplace_back("iterated_integral_ts", iterated_tb.value);
    report.observations.emplace_back("iterated_integral_st", iterated_st.value);
    report.add_row("inner product vs iterated integral", std::abs(ip12 - iterated_tb.value),
                   gap_tol);
    report.add_row("iterated order swap", std::abs(iterated_tb.value - iterated_st.value),
                   1e-10 * scale);
    report.add_row("argument swap symmetry", std::abs(ip12 - ip21), 1e-12 * scale);
    report.finalize();
    return report;
}

inline void write_check_reports_csv(const std::string& path,
                                    const std::vector<CheckReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "check,parameter_hash,verdict,worst_margin\n";
    for (const auto& r : reports) {
        out << r.check_name << "," << parameter_hash(r.parameters) << ","
            << (r.pass ? "pass" : "fail") << "," << format_number(r.worst_margin) << "\n";
    }
}

inline void write_check_reports_text(std::ostream& out, const std::vector<CheckReport>& reports) {
    for (const auto& r : reports) {
        out << "== " << r.check_name << " [" << (r.pass ? "pass" : "FAIL") << "]\n";
        for (const auto& [k, v] : r.parameters) out << "   param " << k << " = " << v << "\n";
        for (const auto& row : r.rows)
            out << "   " << row.label << ": observed " << format_number(row.observed)
                << " bound " << format_number(row.bound) << " margin "
                << format_number(row.margin) << "\n";
        for (const auto& [k, v] : r.observations)
            out << "   obs " << k << " = " << format_number(v) << "\n";
        if (!r.note.empty()) out << "   note: " << r.note << "\n";
    }
}

}  // namespace rkhsid
