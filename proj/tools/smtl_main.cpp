#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "smtl/cli.hpp"

namespace {

void add_hyper_flags(CLI::App* cmd, smtl::cli::HyperFlags& flags) {
    cmd->add_option("--s", flags.s, "support budget per task");
    cmd->add_option("--lambda", flags.lambda, "coefficient-averaging penalty");
    cmd->add_option("--alpha", flags.alpha, "ridge penalty");
    cmd->add_option("--delta", flags.delta, "support-averaging penalty");
    cmd->add_option("--delta-star", flags.delta_star,
                    "support-averaging penalty before tau* standardization");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse multi-task linear regression toolkit"};
    app.require_subcommand(1);

    smtl::cli::FitOptions fit_opt;
    auto* fit = app.add_subcommand("fit", "fit one model on a task directory");
    fit->add_option("--data", fit_opt.data_dir, "directory of per-task CSVs")->required();
    fit->add_option("--out", fit_opt.out_dir, "output directory")->required();
    fit->add_option("--method", fit_opt.method, "TS-SR, Bbar, Zbar+L2, Zbar+Bbar, CS+L2, CS+Bbar")->required();
    add_hyper_flags(fit, fit_opt.hyper);
    fit->add_option("--config", fit_opt.config_file, "key=value config file");
    fit->add_option("--seed", fit_opt.seed, "random seed");
    fit->add_option("--threads", fit_opt.threads, "thread budget (or SMTL_THREADS)");
    fit->add_option("--swaps", fit_opt.local_search_iterations,
                    "local search swap budget (0 disables)");
    fit->add_flag("--no-warm-start", [&](std::int64_t) { fit_opt.warm_start = false; },
                  "skip the relaxed-support warm start");

    smtl::cli::TuneOptions tune_opt;
    auto* tune = app.add_subcommand("tune", "cross-validate a hyperparameter grid");
    tune->add_option("--data", tune_opt.data_dir, "directory of per-task CSVs")->required();
    tune->add_option("--out", tune_opt.out_dir, "output directory")->required();
    tune->add_option("--method", tune_opt.method, "method name")->required();
    tune->add_option("--s-grid", tune_opt.s_grid, "support budgets")->delimiter(',')->required();
    tune->add_option("--lambda-grid", tune_opt.lambda_grid, "lambda values")->delimiter(',');
    tune->add_option("--alpha-grid", tune_opt.alpha_grid, "alpha values")->delimiter(',');
    tune->add_option("--delta-star-grid", tune_opt.delta_star_grid,
                     "delta* values (standardized internally)")->delimiter(',');
    tune->add_option("--folds", tune_opt.folds, "CV folds");
    tune->add_option("--pilot-alpha", tune_opt.pilot_alpha,
                     "fixed ridge for stage 1 of two-stage tuning");
    tune->add_option("--config", tune_opt.config_file, "key=value config file");
    tune->add_option("--seed", tune_opt.seed, "random seed");
    tune->add_option("--threads", tune_opt.threads, "thread budget");
    tune->add_option("--swaps", tune_opt.local_search_iterations,
                     "local search budget for the final refit");

    smtl::cli::SimulateOptions sim_opt;
    auto* sim = app.add_subcommand("simulate", "replicate study: generate, tune, fit, evaluate");
    sim->add_option("--config", sim_opt.config_file, "key=value config file")->required();
    sim->add_option("--out", sim_opt.out_dir, "output directory")->required();
    sim->add_option("--replicates", sim_opt.replicates, "number of replicates");
    sim->add_option("--methods", sim_opt.methods, "methods to run")->delimiter(',')->required();
    sim->add_option("--seed", sim_opt.seed, "random seed");
    sim->add_option("--threads", sim_opt.threads, "thread budget");
    sim->add_flag("--dump-data", sim_opt.dump_data, "write per-replicate datasets");

    smtl::cli::ExportMipOptions mip_opt;
    auto* mip = app.add_subcommand("export-mip", "write the big-M model file");
    mip->add_option("--data", mip_opt.data_dir, "directory of per-task CSVs")->required();
    mip->add_option("--out", mip_opt.out_file, "output .lp path")->required();
    mip->add_option("--method", mip_opt.method, "method name")->required();
    add_hyper_flags(mip, mip_opt.hyper);
    mip->add_option("--big-m", mip_opt.big_m, "override the data-driven M");
    mip->add_option("--seed", mip_opt.seed, "random seed");

    smtl::cli::OracleOptions oracle_opt;
    auto* oracle = app.add_subcommand("oracle", "exact optimum by support enumeration");
    oracle->add_option("--data", oracle_opt.data_dir, "directory of per-task CSVs")->required();
    add_hyper_flags(oracle, oracle_opt.hyper);
    oracle->add_flag("--common", oracle_opt.common_support, "common-support mode");
    oracle->add_option("--compare", oracle_opt.compare_dir,
                       "fit output directory to report the optimality gap for");
    oracle->add_option("--max-p", oracle_opt.limits.max_p, "enumeration limit on p");
    oracle->add_option("--max-s", oracle_opt.limits.max_s, "enumeration limit on s");
    oracle->add_option("--max-k", oracle_opt.limits.max_K, "enumeration limit on K");
    oracle->add_option("--seed", oracle_opt.seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return smtl::cli::cmd_fit(fit_opt);
        if (tune->parsed()) return smtl::cli::cmd_tune(tune_opt);
        if (sim->parsed()) return smtl::cli::cmd_simulate(sim_opt);
        if (mip->parsed()) return smtl::cli::cmd_export_mip(mip_opt);
        if (oracle->parsed()) return smtl::cli::cmd_oracle(oracle_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
