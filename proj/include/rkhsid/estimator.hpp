#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rkhsid/convolution.hpp"
#include "rkhsid/dataset.hpp"
#include "rkhsid/kernel.hpp"
#include "rkhsid/rkhs.hpp"
#include "rkhsid/signal.hpp"

namespace rkhsid {

// Gram matrix of the convolution representers at the sample times, i.e. the
// kernel pushed through the input at both arguments. error_bounds carries the
// per-entry effect of representer truncation (zero when supports are finite
// and kept whole).
struct OutputKernelMatrix {
    std::vector<double> times;
    Eigen::MatrixXd values;
    Eigen::MatrixXd error_bounds;
};

namespace detail {

// All representers share one atom lattice (integers for discrete time, the
// union of dyadic grids otherwise). O = V K V^T on that lattice is the same
// finite sum as the pairwise inner products, just reordered.
inline OutputKernelMatrix gram_of_representers(const KernelDescriptor& k,
                                               const std::vector<Representer>& reps) {
    const auto n = static_cast<Eigen::Index>(reps.size());
    OutputKernelMatrix out;
    out.values = Eigen::MatrixXd::Zero(n, n);
    out.error_bounds = Eigen::MatrixXd::Zero(n, n);
    for (const auto& r : reps) out.times.push_back(r.tau);

    std::vector<double> centers;
    for (const auto& r : reps)
        for (const auto& a : r.element.atoms()) centers.push_back(a.center);
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());

    if (!centers.empty() && centers.size() <= 4096) {
        const auto m = static_cast<Eigen::Index>(centers.size());
        Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, m);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (const auto& a : reps[static_cast<std::size_t>(i)].element.atoms()) {
                const auto j = static_cast<Eigen::Index>(
                    std::lower_bound(centers.begin(), centers.end(), a.center) -
                    centers.begin());
                weights(i, j) += a.weight;
            }
        }
        const GramMatrix g = gram(k, centers);
        out.values = weights * g.values * weights.transpose();
        out.values = 0.5 * (out.values + out.values.transpose()).eval();
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                const double v = inner(reps[static_cast<std::size_t>(i)].element,
                                       reps[static_cast<std::size_t>(j)].element);
                out.values(i, j) = v;
                out.values(j, i) = v;
            }
        }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const double ni = std::sqrt(std::max(0.0, out.values(i, i)));
        for (Eigen::Index j = 0; j < n; ++j) {
            const double nj = std::sqrt(std::max(0.0, out.values(j, j)));
            const double ti = reps[static_cast<std::size_t>(i)].tail_bound;
            const double tj = reps[static_cast<std::size_t>(j)].tail_bound;
            out.error_bounds(i, j) = ni * tj + nj * ti + ti * tj;
        }
    }
    return out;
}

}  // namespace detail

inline OutputKernelMatrix output_kernel_matrix(const KernelDescriptor& k, const Signal& u,
                                               const std::vector<double>& times,
                                               double tail_tol = 1e-8, int level = 10) {
    if (times.empty()) throw std::invalid_argument("output_kernel_matrix: no sample times");
    std::vector<Representer> reps;
    reps.reserve(times.size());
    for (double t : times) reps.push_back(representer_phi(k, u, t, tail_tol, level));
    return detail::gram_of_representers(k, reps);
}

struct FitDiagnostics {
    double residual_inf = 0.0;       // ||(O + lambda I) c - y||_inf
    double condition_estimate = 0.0; // of O + lambda I
    double jitter_added = 0.0;
    bool refactorized = false;
};

struct Estimate {
    KernelDescriptor kernel;
    Signal input;
    std::vector<double> sample_times;
    Eigen::VectorXd coefficients;
    double lambda = 0.0;
    std::vector<Representer> representers;
    RkhsElement impulse_element;  // sum_i c_i phi_{t_i}
    FitDiagnostics diagnostics;
};

namespace detail {

// Condition estimate of the SPD matrix A via power iteration on A and on
// A^{-1} through an existing factorization. Deterministic start vector.
inline double condition_estimate(const Eigen::MatrixXd& a, const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const Eigen::Index n = a.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    double hi = 0.0;
    for (int it = 0; it < 30; ++it) {
        v = (a * v).normalized();
        hi = v.dot(a * v);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n).normalized();
    double inv_hi = 0.0;
    for (int it = 0; it < 30; ++it) {
        w = llt.solve(w).normalized().eval();
        inv_hi = w.dot(llt.solve(w));
    }
    const double lo = inv_hi > 0.0 ? 1.0 / inv_hi : 0.0;
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Solve the regularized estimation problem: coefficients from the
// shifted-Gram linear system, fitted response evaluable anywhere.
inline Estimate fit(const KernelDescriptor& k, const Dataset& data, double lambda,
                    double tail_tol = 1e-8, int level = 10) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("fit: lambda must be a positive real (uniqueness needs it)");
    if (data.input.domain() != k.domain())
        throw std::invalid_argument("fit: dataset and kernel domains differ");

    std::vector<Representer> reps;
    reps.reserve(data.size());
    for (double t : data.sample_times) reps.push_back(representer_phi(k, data.input, t, tail_tol, level));
    OutputKernelMatrix okm = detail::gram_of_representers(k, reps);

    const auto n = static_cast<Eigen::Index>(data.size());
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = data.outputs[static_cast<std::size_t>(i)];

    Eigen::MatrixXd a = okm.values + lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    FitDiagnostics diag;
    if (llt.info() != Eigen::Success) {
        // Gram of representers is PSD in exact arithmetic; quadrature noise
        // can break that by a hair. One jittered retry, reported.
        diag.jitter_added = 1e-12 * okm.values.trace() / static_cast<double>(n);
        diag.refactorized = true;
        a.diagonal().array() += diag.jitter_added;
        llt.compute(a);
        if (llt.info() != Eigen::Success)
            throw numerical_failure("fit: Cholesky factorization failed even after jitter");
    }
    Eigen::VectorXd c = llt.solve(y);
    const double y_inf = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
    const double residual_bound = 1e-8 * (1.0 + y_inf);
    diag.residual_inf = (a * c - y).cwiseAbs().maxCoeff();
    for (int refine = 0; refine < 2 && diag.residual_inf > residual_bound; ++refine) {
        c += llt.solve(y - a * c);
        diag.residual_inf = (a * c - y).cwiseAbs().maxCoeff();
    }
    if (!(diag.residual_inf <= residual_bound))
        throw numerical_failure("fit: solve residual " + format_number(diag.residual_inf) +
                                " exceeds bound");
    diag.condition_estimate = detail::condition_estimate(a, llt);

    RkhsElement combined(k);
    for (Eigen::Index i = 0; i < n; ++i)
        combined = combined + reps[static_cast<std::size_t>(i)].element.scaled(c(i));

    return Estimate{k,      data.input, data.sample_times, std::move(c),
                    lambda, std::move(reps), std::move(combined), diag};
}

// g*_t = sum_i c_i phi_{t_i}(t).
inline double predict_impulse(const Estimate& est, double t) {
    return est.impulse_element.evaluate(t);
}

// Output of the fitted model under the training input at time tau.
inline double predict_output(const Estimate& est, double tau) {
    return convolve(est.input, tau, est.impulse_element);
}

// Value of the regularized objective at an arbitrary finite-atom element.
inline double objective(const KernelDescriptor& k, const Dataset& data, double lambda,
                        const RkhsElement& g) {
    if (g.kernel() != k) throw std::invalid_argument("objective: element uses a different kernel");
    KahanSum loss;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = convolve(data.input, data.sample_times[i], g) - data.outputs[i];
        loss.add(r * r);
    }
    return loss.value() + lambda * inner(g, g);
}

struct LambdaSelection {
    double best = 0.0;
    std::vector<std::pair<double, double>> holdout_mse;  // (lambda, mse), grid order
};

// Plumbing-level grid search: fit on even-indexed samples, score mean squared
// output error on odd-indexed ones, keep the best (ties -> larger lambda).
// Not one of the principled tuning rules from the literature; a convenience.
inline LambdaSelection select_lambda(const KernelDescriptor& k, const Dataset& data,
                                     const std::vector<double>& grid, double tail_tol = 1e-8) {
    if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
    if (data.size() < 2) return LambdaSelection{grid.front(), {}};

    std::vector<double> train_t, train_y, hold_t, hold_y;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i % 2 == 0) {
            train_t.push_back(data.sample_times[i]);
            train_y.push_back(data.outputs[i]);
        } else {
            hold_t.push_back(data.sample_times[i]);
            hold_y.push_back(data.outputs[i]);
        }
    }
    const Dataset train = Dataset::make(data.input, train_t, train_y, data.noise_sigma);

    LambdaSelection sel;
    double best_mse = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        const Estimate est = fit(k, train, lambda, tail_tol);
        KahanSum se;
        for (std::size_t i = 0; i < hold_t.size(); ++i) {
            const double r = predict_output(est, hold_t[i]) - hold_y[i];
            se.add(r * r);
        }
        const double mse = se.value() / static_cast<double>(hold_t.size());
        sel.holdout_mse.emplace_back(lambda, mse);
        if (mse < best_mse || (mse == best_mse && lambda > sel.best)) {
            best_mse = mse;
            sel.best = lambda;
        }
    }
    return sel;
}

}  // namespace rkhsid
