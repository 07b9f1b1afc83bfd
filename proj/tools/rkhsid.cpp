// Command-line front end: simulate / identify / verify / kernels.
#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "rkhsid/config.hpp"
#include "rkhsid/errors.hpp"
#include "rkhsid/runner.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string seed;
    std::string lambda;
    std::string kernel_family;
    std::string beta;
    std::string decay;
    std::string rho;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "experiment config file");
    if (config_required) opt->required();
    cmd->add_option("--out", flags.out_dir, "output directory (overrides [output].directory)");
    cmd->add_option("--seed", flags.seed, "noise seed override");
    cmd->add_option("--lambda", flags.lambda, "regularization weight or grid override");
    cmd->add_option("--kernel", flags.kernel_family, "kernel family override (tc|dc|ss|tabulated)");
    cmd->add_option("--beta", flags.beta, "tc/ss decay hyperparameter override");
    cmd->add_option("--decay", flags.decay, "dc decay hyperparameter override");
    cmd->add_option("--rho", flags.rho, "dc correlation hyperparameter override");
}

// Flags win over config values, which win over defaults.
rkhsid::ExperimentConfig load_config(const CommonFlags& flags) {
    auto cfg = rkhsid::ExperimentConfig::parse_file(flags.config_path);
    if (!flags.seed.empty()) cfg.set("noise", "seed", flags.seed);
    if (!flags.lambda.empty()) cfg.set("fit", "lambda", flags.lambda);
    if (!flags.kernel_family.empty()) cfg.set("kernel", "family", flags.kernel_family);
    if (!flags.beta.empty()) cfg.set("kernel", "beta", flags.beta);
    if (!flags.decay.empty()) cfg.set("kernel", "decay", flags.decay);
    if (!flags.rho.empty()) cfg.set("kernel", "rho", flags.rho);
    return cfg;
}

std::string resolve_out_dir(const CommonFlags& flags, const rkhsid::ExperimentConfig& cfg) {
    if (!flags.out_dir.empty()) return flags.out_dir;
    return cfg.get_or("output", "directory", "out");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel-based impulse-response identification"};
    app.require_subcommand(1);

    CommonFlags sim_flags, id_flags, ver_flags;
    std::string dataset_file, input_file;

    auto* sim = app.add_subcommand("simulate", "generate input, dataset, and true impulse files");
    add_common(sim, sim_flags, true);

    auto* ident = app.add_subcommand("identify", "fit the kernel model to a dataset");
    add_common(ident, id_flags, true);
    ident->add_option("--data", dataset_file, "dataset CSV (default <out>/dataset.csv)");
    ident->add_option("--input", input_file, "input signal CSV (default <out>/input.csv)");

    auto* ver = app.add_subcommand("verify", "run the numerical check suite");
    add_common(ver, ver_flags, true);

    auto* kern = app.add_subcommand("kernels", "list kernel families and hyperparameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            const auto cfg = load_config(sim_flags);
            return rkhsid::cmd_simulate(cfg, resolve_out_dir(sim_flags, cfg));
        }
        if (ident->parsed()) {
            const auto cfg = load_config(id_flags);
            const std::string out = resolve_out_dir(id_flags, cfg);
            if (dataset_file.empty()) dataset_file = out + "/dataset.csv";
            if (input_file.empty()) input_file = out + "/input.csv";
            return rkhsid::cmd_identify(cfg, dataset_file, input_file, out);
        }
        if (ver->parsed()) {
            const auto cfg = load_config(ver_flags);
            return rkhsid::cmd_verify(cfg, resolve_out_dir(ver_flags, cfg));
        }
        if (kern->parsed()) return rkhsid::cmd_kernels();
    } catch (const rkhsid::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const rkhsid::divergence_suspected& e) {
        std::cerr << "numerical failure (divergence suspected): " << e.what() << "\n";
        return 3;
    } catch (const rkhsid::numerical_failure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
