#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkhsid/checks.hpp"
#include "rkhsid/config.hpp"
#include "rkhsid/csv.hpp"
#include "rkhsid/dataset.hpp"
#include "rkhsid/estimator.hpp"
#include "rkhsid/kernel.hpp"
#include "rkhsid/signal.hpp"
#include "rkhsid/simulate.hpp"

namespace rkhsid {

inline TimeDomain domain_from_string(const std::string& s) {
    if (s == "discrete") return TimeDomain::Discrete;
    if (s == "continuous") return TimeDomain::Continuous;
    throw config_error("unknown domain '" + s + "' (expected discrete or continuous)");
}

inline KernelDescriptor kernel_from_config(const ExperimentConfig& cfg,
                                           const std::string& base_dir = ".") {
    if (!cfg.has_section("kernel")) throw config_error("config needs a [kernel] block");
    const std::string family = cfg.get("kernel", "family");
    const TimeDomain domain =
        domain_from_string(cfg.get_or("kernel", "domain", "discrete"));
    if (family == "tc") return KernelDescriptor::tc(domain, cfg.get_number("kernel", "beta"));
    if (family == "dc") {
        if (domain != TimeDomain::Discrete)
            throw config_error("dc kernel requires domain = discrete");
        return KernelDescriptor::dc(cfg.get_number("kernel", "decay"),
                                    cfg.get_number("kernel", "rho"));
    }
    if (family == "ss") {
        if (domain != TimeDomain::Continuous)
            throw config_error("ss kernel requires domain = continuous");
        return KernelDescriptor::ss(cfg.get_number("kernel", "beta"));
    }
    if (family == "tabulated") {
        const std::string table = cfg.get("kernel", "table");
        const auto path = std::filesystem::path(table).is_absolute()
                              ? table
                              : (std::filesystem::path(base_dir) / table).string();
        return read_tabulated_kernel_csv(path, domain);
    }
    throw config_error("unknown kernel family '" + family + "'");
}

inline Signal input_from_config(const ExperimentConfig& cfg, const std::string& base_dir = ".") {
    if (!cfg.has_section("input")) throw config_error("config needs an [input] block");
    if (const auto* file = cfg.find("input", "file")) {
        const auto path = std::filesystem::path(*file).is_absolute()
                              ? *file
                              : (std::filesystem::path(base_dir) / *file).string();
        return read_signal_csv(path);
    }
    InputParams p;
    p.domain = domain_from_string(cfg.get_or("input", "domain", "discrete"));
    p.amplitude = cfg.get_number_or("input", "amplitude", 1.0);
    p.start = static_cast<std::int64_t>(cfg.get_number_or("input", "start", 0.0));
    p.length = static_cast<std::int64_t>(cfg.get_number_or("input", "length", 64.0));
    p.frequency = cfg.get_number_or("input", "frequency", 0.05);
    p.phase = cfg.get_number_or("input", "phase", 0.0);
    const auto seed = static_cast<std::uint64_t>(cfg.get_number_or("input", "seed", 0.0));
    return make_input(input_kind_from_string(cfg.get("input", "kind")), p, seed);
}

inline LtiSystem system_from_config(const ExperimentConfig& cfg) {
    if (!cfg.has_section("system")) throw config_error("config needs a [system] block");
    const std::string type = cfg.get("system", "type");
    if (type == "one_pole") return LtiSystem::one_pole(cfg.get_number("system", "pole"));
    if (type == "rational")
        return LtiSystem::rational(parse_time_list(cfg.get("system", "num"), "[system].num"),
                                   parse_time_list(cfg.get("system", "den"), "[system].den"));
    if (type == "fir")
        return LtiSystem::fir(parse_time_list(cfg.get("system", "taps"), "[system].taps"),
                              cfg.get_number_or("system", "tail_c", 0.0),
                              cfg.get_number_or("system", "tail_r", 0.5));
    if (type == "exp_sum") {
        // terms = c1:a1,c2:a2
        std::vector<std::pair<double, double>> terms;
        std::string cur;
        for (char c : cfg.get("system", "terms") + ",") {
            if (c == ',') {
                const auto colon = cur.find(':');
                if (colon == std::string::npos)
                    throw config_error("[system].terms entries must be coef:rate");
                terms.emplace_back(parse_number(cur.substr(0, colon), "[system].terms"),
                                   parse_number(cur.substr(colon + 1), "[system].terms"));
                cur.clear();
            } else {
                cur += c;
            }
        }
        return LtiSystem::exp_sum(std::move(terms));
    }
    throw config_error("unknown system type '" + type + "'");
}

inline std::vector<double> times_from_config(const ExperimentConfig& cfg) {
    if (!cfg.has_section("samples")) throw config_error("config needs a [samples] block");
    return parse_time_list(cfg.get("samples", "times"), "[samples].times");
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command,
                           const ExperimentConfig& cfg) {
    std::ofstream out(dir / "manifest.txt", std::ios::binary);
    out << "command = " << command << "\n";
    out << "config_hash = " << cfg.hash() << "\n";
    out << "--- canonical config ---\n" << cfg.canonical_text();
}

inline void write_estimate_text(const std::string& path, const Estimate& est,
                                const std::string& input_file) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const auto& [k, v] : est.kernel.describe()) out << "kernel." << k << " = " << v << "\n";
    out << "lambda = " << format_number(est.lambda) << "\n";
    out << "input_file = " << input_file << "\n";
    out << "times =";
    for (std::size_t i = 0; i < est.sample_times.size(); ++i)
        out << (i ? "," : " ") << format_number(est.sample_times[i]);
    out << "\n";
    out << "coefficients =";
    for (Eigen::Index i = 0; i < est.coefficients.size(); ++i)
        out << (i ? "," : " ") << format_number(est.coefficients(i));
    out << "\n";
}

// Rebuild a fitted model from its text form plus the input signal it names.
inline Estimate read_estimate_text(const std::string& path, const Signal& input,
                                   double tail_tol = 1e-8) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    std::vector<std::pair<std::string, std::string>> kernel_kv;
    for (const auto& [key, value] : kv)
        if (key.rfind("kernel.", 0) == 0) kernel_kv.emplace_back(key.substr(7), value);
    const KernelDescriptor k = kernel_from_description(kernel_kv, path);
    const auto times = parse_time_list(kv.at("times"), path);
    const auto coefs = parse_time_list(kv.at("coefficients"), path);
    if (times.size() != coefs.size())
        throw std::invalid_argument(path + ": times/coefficients length mismatch");
    const double lambda = parse_number(kv.at("lambda"), path);

    Estimate est{k, input, times, Eigen::VectorXd(static_cast<Eigen::Index>(coefs.size())),
                 lambda, {}, RkhsElement(k), {}};
    for (std::size_t i = 0; i < coefs.size(); ++i)
        est.coefficients(static_cast<Eigen::Index>(i)) = coefs[i];
    for (std::size_t i = 0; i < times.size(); ++i) {
        est.representers.push_back(representer_phi(k, input, times[i], tail_tol));
        est.impulse_element =
            est.impulse_element + est.representers.back().element.scaled(coefs[i]);
    }
    return est;
}

// simulate: write input, noiseless-truth impulse table, and noisy dataset.
inline int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    const LtiSystem sys = system_from_config(cfg);
    const Signal u = input_from_config(cfg);
    const auto times = times_from_config(cfg);
    NoiseSpec noise;
    noise.sigma = cfg.get_number_or("noise", "sigma", 0.0);
    noise.seed = static_cast<std::uint64_t>(cfg.get_number_or("noise", "seed", 0.0));

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    const Dataset data = make_dataset(sys, u, times, noise);
    write_signal_csv((dir / "input.csv").string(), u);
    write_dataset_csv((dir / "dataset.csv").string(), data);

    const auto grid = parse_time_list(cfg.get_or("fit", "grid", "0:63"), "[fit].grid");
    std::vector<std::vector<double>> rows;
    for (double t : grid) rows.push_back({t, sys.true_response(t)});
    write_csv((dir / "true_impulse.csv").string(), {"t", "g"}, rows);
    write_manifest(dir, "simulate", cfg);
    return 0;
}

// identify: fit the kernel model to a dataset, export the estimate, the
// impulse response on the requested grid, and fit diagnostics.
inline int cmd_identify(const ExperimentConfig& cfg, const std::string& dataset_file,
                        const std::string& input_file, const std::string& out_dir) {
    const KernelDescriptor k = kernel_from_config(cfg);
    const Signal u = read_signal_csv(input_file);
    const Dataset data = read_dataset_csv(dataset_file, u);
    const double tail_tol = cfg.get_number_or("fit", "tail_tol", 1e-8);
    const int level = static_cast<int>(cfg.get_number_or("fit", "level", 10.0));

    const auto lambdas = parse_lambda_spec(cfg.get_or("fit", "lambda", "0.1"), "[fit].lambda");
    LambdaSelection selection;
    double lambda = lambdas.front();
    if (lambdas.size() > 1) {
        selection = select_lambda(k, data, lambdas, tail_tol);
        lambda = selection.best;
    }
    const Estimate est = fit(k, data, lambda, tail_tol, level);

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_estimate_text((dir / "estimate.txt").string(), est, input_file);

    const auto grid = parse_time_list(cfg.get_or("fit", "grid", "0:63"), "[fit].grid");
    std::vector<std::vector<double>> rows;
    for (double t : grid) rows.push_back({t, predict_impulse(est, t)});
    write_csv((dir / "ghat.csv").string(), {"t", "g_hat"}, rows);

    std::ofstream diag(dir / "fit_diagnostics.txt", std::ios::binary);
    diag << "lambda = " << format_number(est.lambda) << "\n";
    diag << "solve_residual_inf = " << format_number(est.diagnostics.residual_inf) << "\n";
    diag << "condition_estimate = " << format_number(est.diagnostics.condition_estimate) << "\n";
    diag << "jitter_added = " << format_number(est.diagnostics.jitter_added) << "\n";
    for (const auto& [l, mse] : selection.holdout_mse)
        diag << "holdout_mse lambda=" << format_number(l) << " mse=" << format_number(mse)
             << "\n";
    write_manifest(dir, "identify", cfg);
    return 0;
}

// verify: run the configured checks, write the report CSV and text; exit
// status 0 only when every check passes.
inline int cmd_verify(const ExperimentConfig& cfg, const std::string& out_dir,
                      std::ostream& log = std::cout) {
    const KernelDescriptor k = kernel_from_config(cfg);
    const double tail_tol = cfg.get_number_or("verify", "tail_tol", 1e-8);
    const double max_horizon =
        cfg.get_number_or("verify", "max_horizon",
                          k.domain() == TimeDomain::Discrete ? 65536.0 : 1024.0);
    const auto seed = static_cast<std::uint64_t>(cfg.get_number_or("verify", "seed", 1.0));
    const double tau = cfg.get_number_or("verify", "tau", 10.0);
    const int trials = static_cast<int>(cfg.get_number_or("verify", "trials", 1000.0));
    const int n_max = static_cast<int>(cfg.get_number_or(
        "verify", "n_max", k.domain() == TimeDomain::Discrete ? 64.0 : 14.0));
    const double gap_tol = cfg.get_number_or("verify", "gap_tol", 1e-4);

    std::string requested = cfg.get_or("verify", "checks", "");
    if (requested.empty()) {
        requested = k.domain() == TimeDomain::Discrete
                        ? "integrability,stability_probe,partial_sum_cauchy,continuity_certificate"
                        : "integrability,dyadic_cauchy,fubini,continuity_certificate";
    }

    std::vector<CheckReport> reports;
    std::string cur;
    for (char c : requested + ",") {
        if (c != ',') {
            cur += c;
            continue;
        }
        if (trimmed_empty(cur)) {
            cur.clear();
            continue;
        }
        const std::string name = cur;
        cur.clear();
        if (name == "integrability") {
            reports.push_back(check_integrability(k, tail_tol, max_horizon));
        } else if (name == "stability_probe") {
            const auto horizon = cfg.get_number_or("verify", "probe_horizon", 4096.0);
            const double tol = cfg.get_number_or("verify", "probe_tol", 1e-8);
            std::vector<Signal> probes;
            InputParams p;
            p.length = 64;
            probes.push_back(make_input(InputKind::Step, p, seed));
            probes.push_back(make_input(InputKind::Prbs, p, seed));
            // L-inf extremizer heuristic: match the sign of the column sums.
            {
                std::vector<double> vals(64, 0.0);
                for (std::size_t s = 0; s < vals.size(); ++s) {
                    KahanSum col;
                    for (std::int64_t t = 0; t <= 256; ++t)
                        col.add(k.eval_unchecked(static_cast<double>(t),
                                                 static_cast<double>(s)));
                    vals[s] = col.value() >= 0.0 ? 1.0 : -1.0;
                }
                probes.push_back(Signal::discrete(0, std::move(vals)));
            }
            reports.push_back(check_stability_probe(k, probes, horizon, tol));
        } else if (name == "partial_sum_cauchy") {
            InputParams p;
            p.start = static_cast<std::int64_t>(tau) - n_max;
            p.length = n_max + 1;
            const Signal u = make_input(InputKind::Prbs, p, seed);
            reports.push_back(check_partial_sum_cauchy(k, u, tau, n_max));
        } else if (name == "continuity_certificate") {
            Signal u = [&] {
                if (cfg.has_section("input")) return input_from_config(cfg);
                InputParams p;
                p.domain = k.domain();
                p.start = -32;
                p.length = 64;
                return make_input(InputKind::Prbs, p, seed);
            }();
            const int level = static_cast<int>(cfg.get_number_or(
                "verify", "level", k.domain() == TimeDomain::Discrete ? 10.0 : 8.0));
            reports.push_back(
                check_continuity_certificate(k, u, tau, trials, seed, tail_tol, level));
        } else if (name == "dyadic_cauchy") {
            const double lo = cfg.get_number_or("verify", "lo", 0.0);
            const double hi = cfg.get_number_or("verify", "hi", 1.0);
            reports.push_back(check_dyadic_cauchy(k, lo, hi, n_max, gap_tol));
        } else if (name == "fubini") {
            const double lo = cfg.get_number_or("verify", "lo", 0.0);
            const double hi = cfg.get_number_or("verify", "hi", 1.0);
            const int level = static_cast<int>(cfg.get_number_or("verify", "level", 12.0));
            reports.push_back(check_fubini(k, {lo, hi}, {0.5 * (lo + hi), hi + 0.5 * (hi - lo)},
                                           level, gap_tol));
        } else {
            throw config_error("unknown check '" + name + "'");
        }
    }

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_check_reports_csv((dir / "checks.csv").string(), reports);
    {
        std::ofstream text(dir / "checks.txt", std::ios::binary);
        write_check_reports_text(text, reports);
    }
    write_manifest(dir, "verify", cfg);
    write_check_reports_text(log, reports);
    bool all_pass = true;
    for (const auto& r : reports) all_pass = all_pass && r.pass;
    return all_pass ? 0 : 1;
}

inline int cmd_kernels(std::ostream& out = std::cout) {
    out << "tc         domains: discrete, continuous   params: beta "
           "(discrete: 0<beta<1, continuous: beta>0)\n";
    out << "dc         domains: discrete               params: decay in (0,1), rho in [-1,1]\n";
    out << "ss         domains: continuous             params: beta > 0\n";
    out << "tabulated  domains: discrete, continuous   params: table = CSV file with header "
           "s,t,value (symmetric)\n";
    return 0;
}

}  // namespace rkhsid
