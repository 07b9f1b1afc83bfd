#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkhsid/dataset.hpp"
#include "rkhsid/random.hpp"
#include "rkhsid/signal.hpp"
#include "rkhsid/time.hpp"

namespace rkhsid {

// Ground-truth BIBO-stable LTI system. Three representations:
//  - Rational: discrete transfer function b(z^-1)/a(z^-1), poles strictly
//    inside the unit circle (checked via the companion matrix).
//  - Fir: explicit impulse-response table, zero beyond it, with a certified
//    geometric bound |g_t| <= C r^t on what the table truncated away.
//  - ExpSum: continuous impulse response sum_i c_i exp(-alpha_i t), all
//    alpha_i > 0, integrated exactly against piecewise-constant inputs.
class LtiSystem {
public:
    static LtiSystem rational(std::vector<double> num, std::vector<double> den) {
        if (den.empty() || den[0] == 0.0)
            throw std::invalid_argument("rational system: leading denominator coefficient is zero");
        for (double c : den)
            if (!std::isfinite(c)) throw std::invalid_argument("rational system: non-finite coefficient");
        for (double c : num)
            if (!std::isfinite(c)) throw std::invalid_argument("rational system: non-finite coefficient");
        const double a0 = den[0];
        for (double& c : den) c /= a0;
        for (double& c : num) c /= a0;
        const double radius = spectral_radius(den);
        if (!(radius < 1.0))
            throw std::invalid_argument("rational system: pole radius " + std::to_string(radius) +
                                        " is not strictly inside the unit circle");
        LtiSystem s;
        s.kind_ = Kind::Rational;
        s.num_ = std::move(num);
        s.den_ = std::move(den);
        s.pole_radius_ = radius;
        return s;
    }

    static LtiSystem one_pole(double a) { return rational({1.0}, {1.0, -a}); }

    // A finite table is the degenerate rational form den = {1}; the tail
    // certificate records what the table is allowed to have truncated.
    static LtiSystem fir(std::vector<double> taps, double tail_c = 0.0, double tail_r = 0.5) {
        if (taps.empty()) throw std::invalid_argument("fir system: empty tap table");
        for (double t : taps)
            if (!std::isfinite(t)) throw std::invalid_argument("fir system: non-finite tap");
        if (!(tail_c >= 0.0) || !(tail_r > 0.0 && tail_r < 1.0))
            throw std::invalid_argument("fir system: need tail constant >= 0 and rate in (0,1)");
        LtiSystem s;
        s.kind_ = Kind::Fir;
        s.num_ = std::move(taps);
        s.den_ = {1.0};
        s.tail_c_ = tail_c;
        s.tail_r_ = tail_r;
        return s;
    }

    static LtiSystem exp_sum(std::vector<std::pair<double, double>> terms) {
        if (terms.empty()) throw std::invalid_argument("exp system: no terms");
        for (const auto& [c, alpha] : terms) {
            if (!std::isfinite(c) || !(alpha > 0.0))
                throw std::invalid_argument("exp system: coefficients finite, rates positive");
        }
        LtiSystem s;
        s.kind_ = Kind::ExpSum;
        s.exp_terms_ = std::move(terms);
        return s;
    }

    TimeDomain domain() const {
        return kind_ == Kind::ExpSum ? TimeDomain::Continuous : TimeDomain::Discrete;
    }

    double true_response(double t) const {
        require_valid_time(domain(), t, "true_response");
        if (kind_ == Kind::ExpSum) {
            double v = 0.0;
            for (const auto& [c, alpha] : exp_terms_) v += c * std::exp(-alpha * t);
            return v;
        }
        const auto n = static_cast<std::size_t>(t);
        if (kind_ == Kind::Fir) return n < num_.size() ? num_[n] : 0.0;
        return impulse_prefix(n + 1)[n];
    }

    // Impulse response g_0..g_{n-1} via the difference equation driven by a
    // unit impulse (exact for both rational and table forms).
    std::vector<double> impulse_prefix(std::size_t n) const {
        if (kind_ == Kind::ExpSum)
            throw std::invalid_argument("impulse_prefix: discrete systems only");
        std::vector<double> g(n, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            double v = t < num_.size() ? num_[t] : 0.0;
            for (std::size_t j = 1; j < den_.size() && j <= t; ++j) v -= den_[j] * g[t - j];
            g[t] = v;
        }
        return g;
    }

    // Sum of |g_t| over a window plus a certified geometric tail; the
    // numerical BIBO witness.
    double l1_bound() const {
        switch (kind_) {
            case Kind::Fir: {
                double sum = 0.0;
                for (double v : num_) sum += std::abs(v);
                return sum + tail_c_ * std::pow(tail_r_, static_cast<double>(num_.size())) /
                                 (1.0 - tail_r_);
            }
            case Kind::ExpSum: {
                double sum = 0.0;
                for (const auto& [c, alpha] : exp_terms_) sum += std::abs(c) / alpha;
                return sum;
            }
            default: {
                const double r = 0.5 * (1.0 + pole_radius_);
                std::size_t h = 64;
                for (;;) {
                    const std::vector<double> g = impulse_prefix(h);
                    double c_fit = 0.0;
                    for (std::size_t t = 0; t < h; ++t)
                        c_fit = std::max(c_fit,
                                         std::abs(g[t]) / std::pow(r, static_cast<double>(t)));
                    const double tail = c_fit * std::pow(r, static_cast<double>(h)) / (1.0 - r);
                    double sum = 0.0;
                    for (double v : g) sum += std::abs(v);
                    if (tail < 1e-12 * std::max(1.0, sum) || h > (1u << 20)) return sum + tail;
                    h *= 2;
                }
            }
        }
    }

    const std::vector<double>& numerator() const { return num_; }
    const std::vector<double>& denominator() const { return den_; }
    const std::vector<std::pair<double, double>>& exp_terms() const { return exp_terms_; }
    double pole_radius() const { return pole_radius_; }

private:
    LtiSystem() = default;

    static double spectral_radius(const std::vector<double>& den) {
        const auto order = static_cast<Eigen::Index>(den.size()) - 1;
        if (order <= 0) return 0.0;
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(order, order);
        for (Eigen::Index i = 0; i < order; ++i)
            companion(0, i) = -den[static_cast<std::size_t>(i) + 1];
        for (Eigen::Index i = 1; i < order; ++i) companion(i, i - 1) = 1.0;
        return companion.eigenvalues().cwiseAbs().maxCoeff();
    }

    enum class Kind { Rational, Fir, ExpSum };
    Kind kind_ = Kind::Rational;
    std::vector<double> num_{1.0};
    std::vector<double> den_{1.0};
    double pole_radius_ = 0.0;
    double tail_c_ = 0.0;
    double tail_r_ = 0.5;
    std::vector<std::pair<double, double>> exp_terms_;
};

// Noiseless outputs y_tau = sum_s g_s u_{tau-s} (or the exact integral for
// the exponential continuous form). Discrete systems run the difference
// equation from the start of the input's support, which is exact -- no
// impulse-response truncation enters at all.
inline std::vector<double> simulate(const LtiSystem& sys, const Signal& u,
                                    const std::vector<double>& times) {
    if (u.domain() != sys.domain())
        throw std::invalid_argument("simulate: input and system domains differ");
    for (double t : times) require_valid_time(sys.domain(), t, "simulate");
    std::vector<double> out(times.size(), 0.0);
    if (times.empty()) return out;

    if (sys.domain() == TimeDomain::Continuous) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double tau = times[i];
            if (u.knots().empty() || tau <= u.knots().front()) continue;
            const double s_max = tau - u.knots().front();
            std::vector<double> pts{0.0, s_max};
            for (double k : u.knots()) {
                const double s = tau - k;
                if (s > 0.0 && s < s_max) pts.push_back(s);
            }
            std::sort(pts.begin(), pts.end());
            pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
            KahanSum acc;
            for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
                const double a = pts[j], b = pts[j + 1];
                const double c = u.value(tau - 0.5 * (a + b));
                if (c == 0.0) continue;
                for (const auto& [coef, alpha] : sys.exp_terms())
                    acc.add(c * coef * (std::exp(-alpha * a) - std::exp(-alpha * b)) / alpha);
            }
            out[i] = acc.value();
        }
        return out;
    }

    const auto t_max =
        static_cast<std::int64_t>(*std::max_element(times.begin(), times.end()));
    const std::int64_t t0 = std::min<std::int64_t>(u.first_index(), 0);
    const auto span = static_cast<std::size_t>(t_max - t0 + 1);
    const auto& num = sys.numerator();
    const auto& den = sys.denominator();

    std::vector<double> y(span, 0.0);
    for (std::int64_t t = t0; t <= t_max; ++t) {
        double v = 0.0;
        for (std::size_t j = 0; j < num.size(); ++j) {
            const std::int64_t idx = t - static_cast<std::int64_t>(j);
            if (idx < u.first_index()) break;
            const double uv = u.value(static_cast<double>(idx));
            if (uv != 0.0) v += num[j] * uv;
        }
        for (std::size_t j = 1; j < den.size(); ++j) {
            const std::int64_t idx = t - static_cast<std::int64_t>(j);
            if (idx >= t0) v -= den[j] * y[static_cast<std::size_t>(idx - t0)];
        }
        y[static_cast<std::size_t>(t - t0)] = v;
    }
    for (std::size_t i = 0; i < times.size(); ++i)
        out[i] = y[static_cast<std::size_t>(static_cast<std::int64_t>(times[i]) - t0)];
    return out;
}

struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

// Measurements: noiseless outputs plus i.i.d. zero-mean Gaussian draws of the
// given standard deviation. Same seed, same dataset, bit for bit.
inline Dataset make_dataset(const LtiSystem& sys, const Signal& u,
                            const std::vector<double>& times, const NoiseSpec& noise) {
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
        throw std::invalid_argument("make_dataset: sigma must be a finite non-negative real");
    std::vector<double> y = simulate(sys, u, times);
    if (noise.sigma > 0.0) {
        Rng rng(noise.seed);
        for (double& v : y) v += noise.sigma * rng.normal();
    }
    return Dataset::make(u, times, std::move(y), noise.sigma);
}

enum class InputKind { Impulse, Step, Prbs, Sine, UniformRandom };

inline InputKind input_kind_from_string(const std::string& s) {
    if (s == "impulse") return InputKind::Impulse;
    if (s == "step") return InputKind::Step;
    if (s == "prbs") return InputKind::Prbs;
    if (s == "sine") return InputKind::Sine;
    if (s == "uniform_random") return InputKind::UniformRandom;
    throw std::invalid_argument("unknown input kind '" + s + "'");
}

struct InputParams {
    TimeDomain domain = TimeDomain::Discrete;
    double amplitude = 1.0;
    std::int64_t start = 0;    // first index (knot) of the window
    std::int64_t length = 64;  // window length in samples
    double frequency = 0.05;   // sine: cycles per sample
    double phase = 0.0;
};

// Bounded test inputs. sup-norm never exceeds the requested amplitude.
// Continuous variants are sample-and-hold staircases on unit intervals; a
// continuous impulse is rejected (a Dirac pulse is not a bounded signal).
inline Signal make_input(InputKind kind, const InputParams& p, std::uint64_t seed) {
    if (!(p.amplitude >= 0.0) || !std::isfinite(p.amplitude))
        throw std::invalid_argument("make_input: amplitude must be finite and non-negative");
    if (p.length < 1) throw std::invalid_argument("make_input: length must be positive");

    std::vector<double> vals(static_cast<std::size_t>(p.length), 0.0);
    Rng rng(seed);
    switch (kind) {
        case InputKind::Impulse:
            if (p.domain == TimeDomain::Continuous)
                throw std::invalid_argument("make_input: no bounded continuous impulse exists");
            return Signal::discrete(0, {p.amplitude});
        case InputKind::Step:
            std::fill(vals.begin(), vals.end(), p.amplitude);
            break;
        case InputKind::Prbs:
            for (double& v : vals) v = p.amplitude * static_cast<double>(rng.sign());
            break;
        case InputKind::Sine:
            for (std::size_t i = 0; i < vals.size(); ++i)
                vals[i] = p.amplitude * std::sin(6.283185307179586 * p.frequency *
                                                     static_cast<double>(i) +
                                                 p.phase);
            break;
        case InputKind::UniformRandom:
            for (double& v : vals) v = p.amplitude * (2.0 * rng.uniform01() - 1.0);
            break;
    }
    if (p.domain == TimeDomain::Discrete) return Signal::discrete(p.start, std::move(vals));
    std::vector<double> knots(vals.size() + 1);
    for (std::size_t i = 0; i <= vals.size(); ++i)
        knots[i] = static_cast<double>(p.start) + static_cast<double>(i);
    vals.push_back(0.0);  // terminate the staircase
    return Signal::piecewise_constant(std::move(knots), std::move(vals));
}

}  // namespace rkhsid
