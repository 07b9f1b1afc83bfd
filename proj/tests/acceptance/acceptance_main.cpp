// Acceptance suite: every release-gating property, one pass/fail line each.
// Usage: acceptance [path-to-cli-binary]
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rkhsid/checks.hpp"
#include "rkhsid/estimator.hpp"
#include "rkhsid/random.hpp"
#include "rkhsid/simulate.hpp"

using namespace rkhsid;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail,
            double seconds, double budget_seconds) {
    const bool in_budget = seconds <= budget_seconds;
    if (!pass || !in_budget) ++g_failures;
    std::printf("[%s] %d. %s: %s (%.2fs of %.0fs budget)\n",
                pass && in_budget ? "PASS" : "FAIL", index, name.c_str(), detail.c_str(),
                seconds, budget_seconds);
    std::fflush(stdout);
}

template <class F>
void run_criterion(int index, const std::string& name, double budget_seconds, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = body();
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(index, name, pass, detail, seconds, budget_seconds);
}

// ---------------------------------------------------------------------------
// 1. The representer-form estimate equals an independently coded primal ridge
//    solve on the truncated lattice.

Eigen::VectorXd primal_ridge(const KernelDescriptor& k, const Signal& u,
                             const std::vector<double>& times, const Eigen::VectorXd& y,
                             double lambda, std::int64_t m) {
    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd big_u(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            big_u(i, j) = u.value(times[static_cast<std::size_t>(i)] - static_cast<double>(j));
    Eigen::MatrixXd gram_k(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
            gram_k(a, b) = k.eval(static_cast<double>(a), static_cast<double>(b));
    const Eigen::MatrixXd lhs =
        gram_k * big_u.transpose() * big_u + lambda * Eigen::MatrixXd::Identity(m, m);
    return Eigen::PartialPivLU<Eigen::MatrixXd>(lhs).solve(gram_k * big_u.transpose() * y);
}

std::pair<bool, std::string> dual_primal_equivalence() {
    Rng rng(1001);
    const std::int64_t m = 64;
    double worst = 0.0;
    for (int instance = 0; instance < 20; ++instance) {
        const KernelDescriptor k =
            instance % 2 == 0
                ? KernelDescriptor::tc(TimeDomain::Discrete, rng.uniform(0.4, 0.9))
                : KernelDescriptor::dc(rng.uniform(0.5, 0.9), rng.uniform(-0.8, 0.8));
        const double lambda = instance % 4 < 2 ? 1e-2 : 1.0;
        const Signal u = make_input(InputKind::UniformRandom, {.length = m}, 500 + instance);

        std::vector<std::int64_t> pool(m);
        for (std::int64_t t = 0; t < m; ++t) pool[static_cast<std::size_t>(t)] = t;
        for (std::size_t i = pool.size() - 1; i > 0; --i)
            std::swap(pool[i], pool[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i)))]);
        std::vector<double> times;
        for (int i = 0; i < 40; ++i) times.push_back(static_cast<double>(pool[static_cast<std::size_t>(i)]));
        std::sort(times.begin(), times.end());

        std::vector<double> y;
        for (int i = 0; i < 40; ++i) y.push_back(rng.uniform(-1.0, 1.0));
        const Dataset data = Dataset::make(u, times, y);
        const Estimate est = fit(k, data, lambda);

        Eigen::VectorXd yv(40);
        for (int i = 0; i < 40; ++i) yv(i) = y[static_cast<std::size_t>(i)];
        const Eigen::VectorXd primal = primal_ridge(k, u, times, yv, lambda, m);

        double diff = 0.0;
        for (std::int64_t t = 0; t < m; ++t)
            diff = std::max(diff, std::abs(predict_impulse(est, static_cast<double>(t)) -
                                           primal(static_cast<Eigen::Index>(t))));
        worst = std::max(worst, diff / primal.cwiseAbs().maxCoeff());
    }
    std::ostringstream ss;
    ss << "20 instances, worst relative error " << format_number(worst) << " (bound 1e-08)";
    return {worst <= 1e-8, ss.str()};
}

// ---------------------------------------------------------------------------
// 2. The output kernel matrix is PSD across random kernel/input/time triples.

std::pair<bool, std::string> output_matrix_psd() {
    Rng rng(2002);
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const bool continuous = trial % 5 == 4;
        KernelDescriptor k = [&] {
            if (continuous)
                return trial % 2 == 0 ? KernelDescriptor::tc(TimeDomain::Continuous,
                                                             rng.uniform(0.5, 2.0))
                                      : KernelDescriptor::ss(rng.uniform(0.5, 1.5));
            return trial % 2 == 0
                       ? KernelDescriptor::tc(TimeDomain::Discrete, rng.uniform(0.3, 0.95))
                       : KernelDescriptor::dc(rng.uniform(0.4, 0.95), rng.uniform(-1.0, 1.0));
        }();
        const auto n_d = rng.integer(3, 10);
        std::vector<double> times;
        if (continuous) {
            for (std::int64_t i = 0; i < n_d; ++i) times.push_back(rng.uniform(0.5, 15.0));
            std::sort(times.begin(), times.end());
            times.erase(std::unique(times.begin(), times.end()), times.end());
        } else {
            std::set<std::int64_t> used;
            while (static_cast<std::int64_t>(used.size()) < n_d) used.insert(rng.integer(0, 100));
            for (auto t : used) times.push_back(static_cast<double>(t));
        }
        const Signal u = [&]() {
            if (continuous) {
                InputParams p;
                p.domain = TimeDomain::Continuous;
                p.length = 6;
                p.amplitude = rng.uniform(0.5, 2.0);
                return make_input(InputKind::UniformRandom, p, 3000 + trial);
            }
            InputParams p;
            p.length = 48;
            p.amplitude = rng.uniform(0.5, 2.0);
            return make_input(trial % 3 == 0 ? InputKind::Prbs : InputKind::UniformRandom, p,
                              3000 + trial);
        }();
        const auto okm = output_kernel_matrix(k, u, times, 1e-8, 6);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(okm.values);
        const double min_eig = eig.eigenvalues().minCoeff();
        const double trace = okm.values.trace();
        if (trace > 0.0) worst_ratio = std::max(worst_ratio, -min_eig / trace);
    }
    std::ostringstream ss;
    ss << "100 triples, worst -min_eig/trace " << format_number(worst_ratio)
       << " (bound 1e-10)";
    return {worst_ratio <= 1e-10, ss.str()};
}

// ---------------------------------------------------------------------------
// 3. Dyadic refinement: norm identity and refinement gap at n = 14.

std::pair<bool, std::string> dyadic_refinement() {
    const auto k = KernelDescriptor::tc(TimeDomain::Continuous, 1.0);
    const auto report = check_dyadic_cauchy(k, 0.0, 1.0, 14, 1e-4);
    double d14 = -1.0, gap = -1.0;
    for (const auto& [name, value] : report.observations)
        if (name == "refinement_gap_n14") d14 = value;
    const double target = 2.0 - 4.0 / std::exp(1.0);
    for (const auto& [name, value] : report.observations)
        if (name == "norm_sq_at_n_max") gap = std::abs(value - target);
    std::ostringstream ss;
    ss << "|norm^2(f14) - (2-4/e)| = " << format_number(gap) << ", d_14 = " << format_number(d14)
       << " (both bounded by 1e-04)";
    return {report.pass && gap <= 1e-4 && d14 >= 0.0 && d14 <= 1e-4, ss.str()};
}

// ---------------------------------------------------------------------------
// 4. Discrete partial sums respect the tail bound on the whole ladder.

std::pair<bool, std::string> partial_sum_ladder() {
    Rng rng(4004);
    int checked = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    bool all_pass = true;
    for (const auto& k : {KernelDescriptor::tc(TimeDomain::Discrete, 0.5),
                          KernelDescriptor::dc(0.75, -0.6)}) {
        for (int rep = 0; rep < 10; ++rep) {
            InputParams p;
            p.start = -70;
            p.length = 150;
            const Signal u = make_input(InputKind::Prbs, p, rng.integer(0, 1 << 30));
            const auto report =
                check_partial_sum_cauchy(k, u, static_cast<double>(rng.integer(0, 12)), 64);
            all_pass = all_pass && report.pass;
            for (const auto& row : report.rows) {
                worst_margin = std::min(worst_margin, row.margin);
                ++checked;
            }
        }
    }
    std::ostringstream ss;
    ss << checked << " gaps on m in {4,8,16,32}, n = 2m; worst margin "
       << format_number(worst_margin) << " (>= 0 required)";
    return {all_pass && worst_margin >= 0.0, ss.str()};
}

// ---------------------------------------------------------------------------
// 5. Continuity certificate: norm bound and duality gap, zero violations.

std::pair<bool, std::string> continuity_certificate() {
    bool all = true;
    double worst = std::numeric_limits<double>::infinity();
    const auto tc = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const auto dc = KernelDescriptor::dc(0.8, 0.35);
    struct Config {
        KernelDescriptor k;
        Signal u;
        double tau;
    };
    std::vector<Config> configs;
    configs.push_back({tc, Signal::discrete(0, {1.0}), 6.0});
    configs.push_back({tc, make_input(InputKind::Prbs, {.start = -25, .length = 60}, 51), 10.0});
    configs.push_back(
        {dc, make_input(InputKind::UniformRandom, {.start = -30, .length = 70}, 52), 12.0});
    configs.push_back({dc, make_input(InputKind::Step, {.length = 40}, 53), 8.0});
    int trials_total = 0;
    for (const auto& cfg : configs) {
        const auto report = check_continuity_certificate(cfg.k, cfg.u, cfg.tau, 1000, 99);
        all = all && report.pass;
        for (const auto& row : report.rows) worst = std::min(worst, row.margin);
        trials_total += 1000;
    }
    std::ostringstream ss;
    ss << trials_total << " random elements across " << configs.size()
       << " configurations, worst margin " << format_number(worst) << " (>= 0 required)";
    return {all && worst >= 0.0, ss.str()};
}

// ---------------------------------------------------------------------------
// 6. Strong convexity: every perturbation of the fit costs at least
//    lambda * ||delta||^2.

std::pair<bool, std::string> strong_convexity() {
    Rng rng(6006);
    double worst_slack = std::numeric_limits<double>::infinity();
    int tested = 0;
    for (int instance = 0; instance < 10; ++instance) {
        const KernelDescriptor k =
            instance % 2 == 0
                ? KernelDescriptor::tc(TimeDomain::Discrete, rng.uniform(0.45, 0.85))
                : KernelDescriptor::dc(rng.uniform(0.55, 0.9), rng.uniform(-0.7, 0.7));
        const double lambda = rng.uniform(0.05, 0.5);
        const Signal u = make_input(InputKind::UniformRandom, {.length = 40}, 700 + instance);
        std::set<std::int64_t> used;
        while (used.size() < 8) used.insert(rng.integer(1, 39));
        std::vector<double> times, y;
        for (auto t : used) {
            times.push_back(static_cast<double>(t));
            y.push_back(rng.uniform(-1.0, 1.0));
        }
        const Dataset data = Dataset::make(u, times, y);
        const Estimate est = fit(k, data, lambda);
        const double j_star = objective(k, data, lambda, est.impulse_element);

        for (int trial = 0; trial < 100; ++trial) {
            RkhsElement delta(k);
            for (const auto& rep : est.representers)
                if (rng.uniform01() < 0.4)
                    delta = delta + rep.element.scaled(rng.uniform(-0.5, 0.5));
            if (rng.uniform01() < 0.7)
                delta = delta +
                        section(k, static_cast<double>(rng.integer(0, 45)))
                            .scaled(rng.uniform(-0.5, 0.5));
            const double d_norm = norm(delta);
            if (d_norm < 1e-9) continue;  // degenerate draw, not a nonzero perturbation
            delta = delta.scaled(rng.uniform(0.25, 4.0) / d_norm);
            const double d2 = inner(delta, delta);
            const double gain = objective(k, data, lambda, est.impulse_element + delta) - j_star;
            worst_slack = std::min(worst_slack, gain - lambda * d2 * (1.0 - 1e-8));
            ++tested;
        }
    }
    std::ostringstream ss;
    ss << tested << " perturbations over 10 fits, worst objective slack "
       << format_number(worst_slack) << " (>= 0 required)";
    return {worst_slack >= 0.0, ss.str()};
}

// ---------------------------------------------------------------------------
// 7. Consistency trend: lattice RMSE falls with less noise and with more data.

double mean_rmse(double sigma, int n_d, std::uint64_t seed_base) {
    const LtiSystem sys = LtiSystem::one_pole(0.8);
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.8);
    const double lambda = 0.05;
    double total = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        const Signal u =
            make_input(InputKind::Prbs, {.length = n_d}, seed_base + static_cast<std::uint64_t>(seed));
        std::vector<double> times;
        for (int t = 1; t <= n_d; ++t) times.push_back(static_cast<double>(t));
        const Dataset data = make_dataset(
            sys, u, times, {sigma, 10000 + seed_base + static_cast<std::uint64_t>(seed)});
        const Estimate est = fit(k, data, lambda);
        double se = 0.0;
        const int lattice = 64;
        for (int t = 0; t < lattice; ++t) {
            const double err = predict_impulse(est, static_cast<double>(t)) -
                               sys.true_response(static_cast<double>(t));
            se += err * err;
        }
        total += std::sqrt(se / lattice);
    }
    return total / 20.0;
}

std::pair<bool, std::string> consistency_trend() {
    const double noisy = mean_rmse(0.1, 200, 1);
    const double cleaner = mean_rmse(0.01, 200, 1);
    const double few = mean_rmse(0.1, 50, 2);
    const double many = mean_rmse(0.1, 500, 2);
    std::ostringstream ss;
    ss << "rmse(sigma 0.1->0.01 at n=200): " << format_number(noisy) << " -> "
       << format_number(cleaner) << "; rmse(n 50->500 at sigma 0.1): " << format_number(few)
       << " -> " << format_number(many);
    return {cleaner < noisy && many < few, ss.str()};
}

// ---------------------------------------------------------------------------
// 8. Determinism of the CLI: identical config and seed, byte-identical files.

std::pair<bool, std::string> cli_determinism(const std::string& cli) {
    if (cli.empty()) return {false, "no CLI binary path supplied"};
    const auto dir = fs::temp_directory_path() / "rkhsid_acceptance_repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "exp.ini", std::ios::binary);
        cfg << "[kernel]\nfamily = tc\ndomain = discrete\nbeta = 0.8\n"
               "[system]\ntype = one_pole\npole = 0.8\n"
               "[input]\nkind = prbs\nlength = 120\nseed = 13\n"
               "[samples]\ntimes = 1:120\n"
               "[noise]\nsigma = 0.1\nseed = 29\n"
               "[fit]\nlambda = 0.05\ngrid = 0:63\n"
               "[output]\ndirectory = "
            << (dir / "out").string() << "\n";
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::vector<std::string> files{"input.csv",    "dataset.csv",  "true_impulse.csv",
                                         "ghat.csv",     "estimate.txt", "fit_diagnostics.txt",
                                         "manifest.txt"};
    std::vector<std::string> first;
    const std::string quiet = " >/dev/null 2>&1";
    for (int run = 0; run < 2; ++run) {
        if (std::system((cli + " simulate --config " + (dir / "exp.ini").string() + quiet)
                            .c_str()) != 0)
            return {false, "simulate failed"};
        if (std::system((cli + " identify --config " + (dir / "exp.ini").string() + quiet)
                            .c_str()) != 0)
            return {false, "identify failed"};
        if (run == 0) {
            for (const auto& f : files) first.push_back(slurp(dir / "out" / f));
        } else {
            for (std::size_t i = 0; i < files.size(); ++i)
                if (slurp(dir / "out" / files[i]) != first[i])
                    return {false, files[i] + " differs between identical runs"};
        }
    }
    std::ostringstream ss;
    ss << files.size() << " output files byte-identical across repeated simulate+identify";
    return {true, ss.str()};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    std::printf("acceptance suite\n");

    run_criterion(1, "dual-primal equivalence", 5.0, dual_primal_equivalence);
    run_criterion(2, "output kernel matrix PSD", 10.0, output_matrix_psd);
    run_criterion(3, "dyadic refinement identity", 5.0, dyadic_refinement);
    run_criterion(4, "partial-sum tail bound", 5.0, partial_sum_ladder);
    run_criterion(5, "continuity certificate", 10.0, continuity_certificate);
    run_criterion(6, "strong convexity of the fit", 10.0, strong_convexity);
    run_criterion(7, "consistency trend", 60.0, consistency_trend);
    run_criterion(8, "CLI determinism", 60.0, [&] { return cli_determinism(cli); });

    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
