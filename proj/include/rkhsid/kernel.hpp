#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkhsid/csv.hpp"
#include "rkhsid/errors.hpp"
#include "rkhsid/quadrature.hpp"
#include "rkhsid/time.hpp"

namespace rkhsid {

enum class KernelFamily { TC, DC, SS, Tabulated };

inline const char* to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::TC: return "tc";
        case KernelFamily::DC: return "dc";
        case KernelFamily::SS: return "ss";
        default: return "tabulated";
    }
}

// A Mercer kernel on T x T. Closed forms:
//   TC discrete    k(s,t) = beta^max(s,t),                 beta in (0,1)
//   TC continuous  k(s,t) = exp(-beta*max(s,t)),           beta > 0
//   DC discrete    k(s,t) = decay^((s+t)/2) * rho^|s-t|,   decay in (0,1), rho in [-1,1]
//   SS continuous  k(s,t) = exp(-beta*(s+t+max(s,t)))/2 - exp(-3*beta*max(s,t))/6, beta > 0
// Tabulated kernels hold a symmetric value matrix on an explicit grid; queries
// snap to the nearest grid point inside the grid's hull and are rejected
// outside it.
class KernelDescriptor {
public:
    static KernelDescriptor tc(TimeDomain domain, double beta) {
        if (!std::isfinite(beta)) throw std::invalid_argument("tc kernel: beta must be finite");
        if (domain == TimeDomain::Discrete) {
            if (!(beta > 0.0 && beta < 1.0))
                throw std::invalid_argument("tc kernel (discrete): beta must lie in (0,1)");
        } else if (!(beta > 0.0)) {
            throw std::invalid_argument("tc kernel (continuous): beta must be positive");
        }
        KernelDescriptor k;
        k.family_ = KernelFamily::TC;
        k.domain_ = domain;
        k.params_ = {{"beta", beta}};
        return k;
    }

    static KernelDescriptor dc(double decay, double rho) {
        if (!(decay > 0.0 && decay < 1.0))
            throw std::invalid_argument("dc kernel: decay must lie in (0,1)");
        if (!(rho >= -1.0 && rho <= 1.0))
            throw std::invalid_argument("dc kernel: rho must lie in [-1,1]");
        KernelDescriptor k;
        k.family_ = KernelFamily::DC;
        k.domain_ = TimeDomain::Discrete;
        k.params_ = {{"decay", decay}, {"rho", rho}};
        return k;
    }

    static KernelDescriptor ss(double beta) {
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw std::invalid_argument("ss kernel: beta must be positive");
        KernelDescriptor k;
        k.family_ = KernelFamily::SS;
        k.domain_ = TimeDomain::Continuous;
        k.params_ = {{"beta", beta}};
        return k;
    }

    static KernelDescriptor tabulated(TimeDomain domain, std::vector<double> grid,
                                      Eigen::MatrixXd values) {
        if (grid.empty()) throw std::invalid_argument("tabulated kernel: empty grid");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            require_valid_time(domain, grid[i], "tabulated kernel grid");
            if (i > 0 && !(grid[i] > grid[i - 1]))
                throw std::invalid_argument("tabulated kernel: grid must be strictly increasing");
        }
        const auto n = static_cast<Eigen::Index>(grid.size());
        if (values.rows() != n || values.cols() != n)
            throw std::invalid_argument("tabulated kernel: value matrix does not match grid size");
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!std::isfinite(values(i, j)))
                    throw std::invalid_argument("tabulated kernel: values must be finite");
                if (values(i, j) != values(j, i))
                    throw std::invalid_argument("tabulated kernel: value matrix must be symmetric");
            }
        KernelDescriptor k;
        k.family_ = KernelFamily::Tabulated;
        k.domain_ = domain;
        k.grid_ = std::move(grid);
        k.values_ = std::move(values);
        return k;
    }

    KernelFamily family() const { return family_; }
    TimeDomain domain() const { return domain_; }

    double param(const std::string& name) const {
        for (const auto& [k, v] : params_)
            if (k == name) return v;
        throw std::invalid_argument("kernel has no hyperparameter '" + name + "'");
    }

    const std::vector<std::pair<std::string, double>>& hyperparameters() const { return params_; }
    const std::vector<double>& grid() const { return grid_; }
    const Eigen::MatrixXd& table() const { return values_; }

    double eval(double s, double t) const {
        require_valid_time(domain_, s, "kernel eval");
        require_valid_time(domain_, t, "kernel eval");
        return eval_unchecked(s, t);
    }

    double eval_unchecked(double s, double t) const {
        const double mx = std::max(s, t);
        switch (family_) {
            case KernelFamily::TC:
                return domain_ == TimeDomain::Discrete ? std::pow(params_[0].second, mx)
                                                       : std::exp(-params_[0].second * mx);
            case KernelFamily::DC:
                return std::pow(params_[0].second, 0.5 * (s + t)) *
                       std::pow(params_[1].second, std::abs(s - t));
            case KernelFamily::SS: {
                const double b = params_[0].second;
                return 0.5 * std::exp(-b * (s + t + mx)) - std::exp(-3.0 * b * mx) / 6.0;
            }
            default: {
                return values_(snap_index(s), snap_index(t));
            }
        }
    }

    bool operator==(const KernelDescriptor& other) const {
        if (family_ != other.family_ || domain_ != other.domain_) return false;
        if (params_ != other.params_) return false;
        if (family_ == KernelFamily::Tabulated) {
            return grid_ == other.grid_ && values_ == other.values_;
        }
        return true;
    }
    bool operator!=(const KernelDescriptor& other) const { return !(*this == other); }

    // Ordered key/value description, suitable for config blocks and CSV
    // header comments.
    std::vector<std::pair<std::string, std::string>> describe() const {
        std::vector<std::pair<std::string, std::string>> out;
        out.emplace_back("family", to_string(family_));
        out.emplace_back("domain", to_string(domain_));
        for (const auto& [k, v] : params_) out.emplace_back(k, format_number(v));
        if (family_ == KernelFamily::Tabulated)
            out.emplace_back("grid_points", std::to_string(grid_.size()));
        return out;
    }

private:
    KernelDescriptor() = default;

    Eigen::Index snap_index(double q) const {
        if (q < grid_.front() || q > grid_.back())
            throw std::invalid_argument("tabulated kernel: query " + std::to_string(q) +
                                        " lies outside the tabulated range");
        auto it = std::lower_bound(grid_.begin(), grid_.end(), q);
        if (it == grid_.end()) return static_cast<Eigen::Index>(grid_.size() - 1);
        if (it == grid_.begin()) return 0;
        const auto hi = static_cast<Eigen::Index>(it - grid_.begin());
        return (q - *(it - 1) <= *it - q) ? hi - 1 : hi;
    }

    KernelFamily family_ = KernelFamily::TC;
    TimeDomain domain_ = TimeDomain::Discrete;
    std::vector<std::pair<std::string, double>> params_;
    std::vector<double> grid_;    // tabulated only
    Eigen::MatrixXd values_;      // tabulated only
};

// Tabulated kernels are read from CSV with header s,t,value. Missing mirror
// entries are filled by symmetry; conflicting mirrors are rejected.
inline KernelDescriptor read_tabulated_kernel_csv(const std::string& path, TimeDomain domain) {
    const CsvTable csv = read_csv(path);
    if (csv.header != std::vector<std::string>{"s", "t", "value"})
        throw std::invalid_argument(path + ": tabulated kernel CSV must have header s,t,value");
    std::vector<double> grid;
    for (const auto& row : csv.rows) {
        if (row.size() != 3) throw std::invalid_argument(path + ": malformed row");
        grid.push_back(row[0]);
        grid.push_back(row[1]);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, n);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen(n, n);
    seen.setConstant(false);
    auto index_of = [&](double q) {
        return static_cast<Eigen::Index>(
            std::lower_bound(grid.begin(), grid.end(), q) - grid.begin());
    };
    for (const auto& row : csv.rows) {
        const auto i = index_of(row[0]);
        const auto j = index_of(row[1]);
        if (seen(i, j) && values(i, j) != row[2])
            throw std::invalid_argument(path + ": conflicting values for symmetric entry");
        values(i, j) = row[2];
        values(j, i) = row[2];
        seen(i, j) = seen(j, i) = true;
    }
    return KernelDescriptor::tabulated(domain, std::move(grid), std::move(values));
}

inline void write_tabulated_kernel_csv(const std::string& path, const KernelDescriptor& k) {
    if (k.family() != KernelFamily::Tabulated)
        throw std::invalid_argument("write_tabulated_kernel_csv: kernel is not tabulated");
    std::vector<std::vector<double>> rows;
    const auto& g = k.grid();
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i; j < g.size(); ++j)
            rows.push_back({g[i], g[j], k.table()(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(j))});
    write_csv(path, {"s", "t", "value"}, rows);
}

// Inverse of describe() for the closed-form families. Tabulated kernels
// round-trip through their own CSV instead.
inline KernelDescriptor kernel_from_description(
    const std::vector<std::pair<std::string, std::string>>& kv, const std::string& context) {
    auto get = [&](const std::string& key) -> std::string {
        for (const auto& [k, v] : kv)
            if (k == key) return v;
        throw std::invalid_argument(context + ": missing kernel field '" + key + "'");
    };
    const std::string family = get("family");
    const std::string domain_str = get("domain");
    const TimeDomain domain =
        domain_str == "discrete" ? TimeDomain::Discrete : TimeDomain::Continuous;
    if (domain_str != "discrete" && domain_str != "continuous")
        throw std::invalid_argument(context + ": unknown domain '" + domain_str + "'");
    if (family == "tc") return KernelDescriptor::tc(domain, parse_number(get("beta"), context));
    if (family == "dc")
        return KernelDescriptor::dc(parse_number(get("decay"), context),
                                    parse_number(get("rho"), context));
    if (family == "ss") return KernelDescriptor::ss(parse_number(get("beta"), context));
    throw std::invalid_argument(context + ": kernel family '" + family +
                                "' cannot be rebuilt from a description");
}

struct GramMatrix {
    std::vector<double> points;
    Eigen::MatrixXd values;
};

inline GramMatrix gram(const KernelDescriptor& k, const std::vector<double>& points) {
    if (points.empty()) throw std::invalid_argument("gram: empty point list");
    for (double p : points) require_valid_time(k.domain(), p, "gram");
    const auto n = static_cast<Eigen::Index>(points.size());
    GramMatrix g;
    g.points = points;
    g.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = k.eval_unchecked(points[i], points[j]);
            g.values(i, j) = v;
            g.values(j, i) = v;
        }
    }
    return g;
}

// Fast kernel evaluation on a fixed ascending grid. Per-pair work collapses
// to a few table lookups for the closed-form families; the values agree with
// eval() up to a couple of ulps (products of exponentials versus one
// exponential of the sum).
class GridKernelCache {
public:
    GridKernelCache(const KernelDescriptor& k, std::vector<double> points)
        : kernel_(&k), points_(std::move(points)) {
        const std::size_t n = points_.size();
        switch (k.family()) {
            case KernelFamily::TC: {
                const double beta = k.param("beta");
                decay_.resize(n);
                for (std::size_t j = 0; j < n; ++j)
                    decay_[j] = k.domain() == TimeDomain::Discrete
                                    ? std::pow(beta, points_[j])
                                    : std::exp(-beta * points_[j]);
                mode_ = Mode::Tc;
                break;
            }
            case KernelFamily::DC: {
                if (!uniform_spacing()) {
                    mode_ = Mode::Generic;
                    break;
                }
                const double decay = k.param("decay");
                const double rho = k.param("rho");
                const double step = n > 1 ? points_[1] - points_[0] : 1.0;
                amp_.resize(n);
                corr_.resize(n);
                for (std::size_t j = 0; j < n; ++j) {
                    amp_[j] = std::pow(decay, 0.5 * points_[j]);
                    corr_[j] = std::pow(rho, static_cast<double>(j) * step);
                }
                mode_ = Mode::Dc;
                break;
            }
            case KernelFamily::SS: {
                const double beta = k.param("beta");
                decay_.resize(n);
                for (std::size_t j = 0; j < n; ++j) decay_[j] = std::exp(-beta * points_[j]);
                mode_ = Mode::Ss;
                break;
            }
            default:
                mode_ = Mode::Generic;
        }
    }

    double operator()(std::size_t i, std::size_t j) const {
        const std::size_t mx = i > j ? i : j;
        switch (mode_) {
            case Mode::Tc: return decay_[mx];
            case Mode::Dc: return amp_[i] * amp_[j] * corr_[i > j ? i - j : j - i];
            case Mode::Ss: {
                const double e = decay_[mx];
                return 0.5 * decay_[i] * decay_[j] * e - e * e * e / 6.0;
            }
            default: return kernel_->eval_unchecked(points_[i], points_[j]);
        }
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<double>& points() const { return points_; }

private:
    bool uniform_spacing() const {
        if (points_.size() < 2) return true;
        const double step = points_[1] - points_[0];
        for (std::size_t j = 2; j < points_.size(); ++j)
            if (std::abs((points_[j] - points_[j - 1]) - step) > 1e-12 * std::abs(step))
                return false;
        return true;
    }

    enum class Mode { Tc, Dc, Ss, Generic };
    const KernelDescriptor* kernel_;
    std::vector<double> points_;
    Mode mode_ = Mode::Generic;
    std::vector<double> decay_;
    std::vector<double> amp_;
    std::vector<double> corr_;
};

struct IntegrabilityProfile {
    std::vector<double> horizons;
    std::vector<double> partial_sums;  // sum of |k| over [0,H]^2, one per horizon
    bool converged = false;
    double last_delta = 0.0;

    double value() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
    double horizon() const { return horizons.empty() ? 0.0 : horizons.back(); }
};

namespace detail {

inline double abs_sum_square_discrete(const KernelDescriptor& k, std::int64_t hi) {
    GridKernelCache cache(k, [&] {
        std::vector<double> pts(static_cast<std::size_t>(hi) + 1);
        for (std::int64_t i = 0; i <= hi; ++i) pts[static_cast<std::size_t>(i)] = static_cast<double>(i);
        return pts;
    }());
    KahanSum sum;
    for (std::size_t t = 0; t < cache.size(); ++t) {
        sum.add(std::abs(cache(t, t)));
        for (std::size_t s = 0; s < t; ++s) sum.add(2.0 * std::abs(cache(s, t)));
    }
    return sum.value();
}

// Nearest-point cell weights of a tabulated kernel inside its hull: integer
// counts for discrete time (queries past min_exclusive only), interval
// lengths for continuous time. Ties at midpoints snap to the lower-indexed
// grid point, matching eval.
inline std::vector<double> tabulated_cell_weights(const KernelDescriptor& k,
                                                  double min_exclusive) {
    const auto& g = k.grid();
    const auto n = g.size();
    std::vector<double> cell(n, 0.0);
    auto integers_in = [](double a_exclusive, double b_inclusive) {
        return std::max(0.0, std::floor(b_inclusive) - std::floor(a_exclusive));
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? g.front() - 1.0 : 0.5 * (g[i] + g[i - 1]);
        const double right = i == n - 1 ? g.back() : 0.5 * (g[i + 1] + g[i]);
        if (k.domain() == TimeDomain::Discrete) {
            cell[i] = integers_in(std::max(left, min_exclusive), right);
        } else {
            const double lo = std::max(i == 0 ? g.front() : left, min_exclusive);
            cell[i] = std::max(0.0, right - lo);
        }
    }
    return cell;
}

// Tabulated kernels extend by zero beyond their hull, so their absolute mass
// is one cell-weighted sum over the table.
inline double tabulated_abs_mass_past(const KernelDescriptor& k, double min_exclusive) {
    const auto& v = k.table();
    const auto cell = tabulated_cell_weights(k, min_exclusive);
    const auto n = static_cast<Eigen::Index>(cell.size());
    KahanSum sum;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            sum.add(std::abs(v(i, j)) * cell[static_cast<std::size_t>(i)] *
                    cell[static_cast<std::size_t>(j)]);
    return sum.value();
}

inline double tabulated_total_abs_mass(const KernelDescriptor& k) {
    return tabulated_abs_mass_past(k, k.grid().front() - 1.0);
}

}  // namespace detail

// Partial absolute sums/integrals of the kernel over growing squares [0,H]^2,
// doubling H until the last doubling moves the value by less than tail_tol.
inline IntegrabilityProfile integrability_profile(const KernelDescriptor& k, double tail_tol,
                                                  double max_horizon) {
    if (!(tail_tol > 0.0)) throw std::invalid_argument("integrability: tail_tol must be positive");
    IntegrabilityProfile profile;
    if (k.family() == KernelFamily::Tabulated) {
        profile.horizons.push_back(k.grid().back());
        profile.partial_sums.push_back(detail::tabulated_total_abs_mass(k));
        profile.converged = true;
        profile.last_delta = 0.0;
        return profile;
    }
    if (k.domain() == TimeDomain::Discrete) {
        double prev = 0.0;
        bool have_prev = false;
        for (double h = 1.0; h <= max_horizon; h *= 2.0) {
            const double s = detail::abs_sum_square_discrete(k, static_cast<std::int64_t>(h));
            profile.horizons.push_back(h);
            profile.partial_sums.push_back(s);
            if (have_prev) {
                profile.last_delta = s - prev;
                if (std::abs(profile.last_delta) < tail_tol) {
                    profile.converged = true;
                    return profile;
                }
            }
            prev = s;
            have_prev = true;
        }
        return profile;
    }
    // Continuous: accumulate dyadic bands so each quadrature sees a region
    // whose scale matches the integrand on it.
    auto f = [&](double s, double t) { return std::abs(k.eval_unchecked(s, t)); };
    const double floor = std::max(tail_tol * 1e-3, 1e-300);
    KahanSum total;
    double h = 1.0;
    total.add(integrate_2d(f, 0.0, h, 0.0, h, 1e-8, floor).value);
    profile.horizons.push_back(h);
    profile.partial_sums.push_back(total.value());
    while (h < max_horizon) {
        const double h_next = std::min(2.0 * h, max_horizon);
        const double band = 2.0 * integrate_2d(f, 0.0, h, h, h_next, 1e-7, floor).value +
                            integrate_2d(f, h, h_next, h, h_next, 1e-7, floor).value;
        total.add(band);
        h = h_next;
        profile.horizons.push_back(h);
        profile.partial_sums.push_back(total.value());
        profile.last_delta = band;
        if (std::abs(band) < tail_tol) {
            profile.converged = true;
            return profile;
        }
    }
    return profile;
}

inline double integrability_measure(const KernelDescriptor& k, double tail_tol,
                                    double max_horizon) {
    const auto profile = integrability_profile(k, tail_tol, max_horizon);
    if (!profile.converged) {
        throw divergence_suspected(
            "integrability measure did not settle by horizon " + format_number(max_horizon) +
                " (last partial sum " + format_number(profile.value()) + ")",
            profile.value(), profile.horizon());
    }
    return profile.value();
}

// Absolute kernel mass over the corner (H,inf)^2, the quantity the truncation
// arguments bound tails with. Expanding partial sums with dyadic doubling;
// throws divergence_suspected when the sums do not settle.
inline double tail_corner_mass(const KernelDescriptor& k, double horizon, double settle_tol,
                               double max_horizon = 1 << 24) {
    if (k.family() == KernelFamily::Tabulated) {
        // Zero beyond the hull; one cell-weighted sum covers the corner.
        if (horizon >= k.grid().back()) return 0.0;
        return detail::tabulated_abs_mass_past(k, horizon);
    }
    if (k.domain() == TimeDomain::Discrete) {
        const auto h = static_cast<std::int64_t>(horizon);
        // Work cap: a corner whose partial sums have not settled within this
        // band width cannot be certified at quadratic cost; report it as
        // suspected divergence instead of grinding.
        const std::int64_t width_cap = 8192;
        double prev = 0.0;
        bool have_prev = false;
        for (std::int64_t b = std::max<std::int64_t>(2 * (h + 1), h + 2);;
             b = std::min(2 * b, static_cast<std::int64_t>(max_horizon))) {
            if (b - h > width_cap) {
                throw divergence_suspected("tail mass did not settle within the work budget",
                                           prev, static_cast<double>(b));
            }
            std::vector<double> pts;
            for (std::int64_t i = h + 1; i <= b; ++i) pts.push_back(static_cast<double>(i));
            GridKernelCache cache(k, std::move(pts));
            KahanSum fresh;
            for (std::size_t t = 0; t < cache.size(); ++t) {
                fresh.add(std::abs(cache(t, t)));
                for (std::size_t s = 0; s < t; ++s) fresh.add(2.0 * std::abs(cache(s, t)));
            }
            const double value = fresh.value();
            if (have_prev && std::abs(value - prev) < settle_tol) return value;
            if (b >= static_cast<std::int64_t>(max_horizon)) {
                throw divergence_suspected("tail mass did not settle", value,
                                           static_cast<double>(b));
            }
            prev = value;
            have_prev = true;
        }
    }
    // Continuous: grow the square one dyadic band at a time. Each band is a
    // region on which the integrand scale matches the region, so the
    // quadrature never faces a spike lost in a huge domain.
    auto f = [&](double s, double t) { return std::abs(k.eval_unchecked(s, t)); };
    const double floor = std::max(settle_tol * 1e-2, 1e-300);
    double b = std::max(2.0 * std::max(horizon, 1.0), horizon + 1.0);
    KahanSum total;
    total.add(integrate_2d(f, horizon, b, horizon, b, 1e-7, floor).value);
    while (b < max_horizon) {
        const double b_next = std::min(2.0 * b, max_horizon);
        const double band = 2.0 * integrate_2d(f, horizon, b, b, b_next, 1e-6, floor).value +
                            integrate_2d(f, b, b_next, b, b_next, 1e-6, floor).value;
        total.add(band);
        if (band < settle_tol) return total.value();
        b = b_next;
    }
    throw divergence_suspected("tail mass did not settle", total.value(), max_horizon);
}

// Smallest dyadic-ladder horizon H with weight_sq * corner_mass(H) below
// tol_sq. Returns {H, corner_mass(H)}.
inline std::pair<double, double> find_truncation_horizon(const KernelDescriptor& k,
                                                         double weight_sq, double tol_sq,
                                                         double max_horizon = 1 << 20) {
    const double settle = std::max(tol_sq * 1e-3, 1e-300);
    double h = 0.0;
    while (true) {
        const double corner = tail_corner_mass(k, h, settle, std::max(max_horizon, 4.0 * (h + 1)));
        if (weight_sq * corner <= tol_sq) return {h, corner};
        if (h >= max_horizon) {
            throw divergence_suspected("no truncation horizon found", corner, h);
        }
        h = h == 0.0 ? 1.0 : 2.0 * h;
    }
}

}  // namespace rkhsid
