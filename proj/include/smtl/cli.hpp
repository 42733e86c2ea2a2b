#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smtl/csv.hpp"
#include "smtl/local_search.hpp"
#include "smtl/metrics.hpp"
#include "smtl/mip.hpp"
#include "smtl/oracle.hpp"
#include "smtl/simulate.hpp"
#include "smtl/solver.hpp"
#include "smtl/threads.hpp"
#include "smtl/tuning.hpp"

namespace smtl {

/// Flat key=value configuration text; `#` starts a comment. Unknown keys are
/// a hard error so typos cannot silently fall back to defaults.
class RunConfig {
  public:
    RunConfig() = default;

    static RunConfig from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        require(in.good(), ErrorKind::io, "cannot open config '" + path.string() + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return from_text(ss.str(), path.string());
    }

    static RunConfig from_text(const std::string& text,
                               const std::string& source = "<text>") {
        RunConfig cfg;
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                if (a == std::string::npos) return std::string();
                const auto b = s.find_last_not_of(" \t\r");
                return s.substr(a, b - a + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            require(eq != std::string::npos, ErrorKind::config,
                    source + ":" + std::to_string(line_no) +
                        ": expected key=value, got '" + line + "'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            require(!key.empty(), ErrorKind::config,
                    source + ":" + std::to_string(line_no) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) {
        values_[key] = value;
    }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& dflt) const {
        mark(key);
        const auto it = values_.find(key);
        return it == values_.end() ? dflt : it->second;
    }
    double get_double(const std::string& key, double dflt) const {
        mark(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        char* end = nullptr;
        const double v = std::strtod(it->second.c_str(), &end);
        require(end && *end == '\0' && end != it->second.c_str(),
                ErrorKind::config, "config key '" + key + "' is not a number");
        return v;
    }
    long long get_int(const std::string& key, long long dflt) const {
        const double v = get_double(key, double(dflt));
        require(v == std::floor(v), ErrorKind::config,
                "config key '" + key + "' must be an integer");
        return static_cast<long long>(v);
    }
    bool get_bool(const std::string& key, bool dflt) const {
        const std::string v = get_string(key, dflt ? "true" : "false");
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        fail(ErrorKind::config, "config key '" + key + "' must be true/false");
    }
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& dflt) const {
        mark(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return dflt;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            require(end && *end == '\0' && end != cell.c_str(), ErrorKind::config,
                    "config key '" + key + "': bad list entry '" + cell + "'");
            out.push_back(v);
        }
        return out;
    }
    std::vector<int> get_ints(const std::string& key,
                              const std::vector<int>& dflt) const {
        std::vector<double> dd;
        dd.reserve(dflt.size());
        for (int v : dflt) dd.push_back(v);
        std::vector<int> out;
        for (double v : get_doubles(key, dd)) {
            require(v == std::floor(v), ErrorKind::config,
                    "config key '" + key + "' must hold integers");
            out.push_back(int(v));
        }
        return out;
    }

    /// Called after a command has read everything it understands.
    void reject_unknown_keys() const {
        for (const auto& [key, value] : values_)
            require(consumed_.count(key) > 0, ErrorKind::config,
                    "unknown config key '" + key + "'");
    }

    void write_resolved(const std::filesystem::path& path) const {
        std::ofstream os(path);
        require(os.good(), ErrorKind::io, "cannot write '" + path.string() + "'");
        for (const auto& [key, value] : values_) os << key << "=" << value << "\n";
    }

  private:
    void mark(const std::string& key) const { consumed_.insert(key); }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

namespace cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct HyperFlags {
    int s = 0;  // 0 = not set
    std::optional<double> lambda, alpha, delta, delta_star;
};

inline SolverConfig solver_config_from(const RunConfig& cfg) {
    SolverConfig sc;
    sc.max_sweeps = int(cfg.get_int("max_sweeps", sc.max_sweeps));
    sc.rel_tol = cfg.get_double("rel_tol", sc.rel_tol);
    sc.lipschitz_power_iters =
        int(cfg.get_int("lipschitz_power_iters", sc.lipschitz_power_iters));
    sc.lipschitz_tol = cfg.get_double("lipschitz_tol", sc.lipschitz_tol);
    sc.use_active_sets = cfg.get_bool("use_active_sets", sc.use_active_sets);
    sc.active_screen_multiplier = int(
        cfg.get_int("active_screen_multiplier", sc.active_screen_multiplier));
    validate_config(sc);
    return sc;
}

/// Resolves the hyperparameter flags against a method's mask; --delta-star is
/// standardized by tau*(s, K, p).
inline std::pair<Hyperparameters, double> resolve_hyper(
    const HyperFlags& flags, Method method, Eigen::Index p, Eigen::Index K,
    std::uint64_t seed) {
    const MethodMask mask = method_mask(method);
    Hyperparameters h;
    h.s = flags.s > 0 ? flags.s : 1;
    h.lambda = flags.lambda.value_or(0.0);
    h.alpha = flags.alpha.value_or(0.0);
    h.common_support = mask.common_support;
    require(!(flags.delta && flags.delta_star), ErrorKind::config,
            "give either --delta or --delta-star, not both");
    double delta_star = 0.0;
    if (flags.delta_star) {
        delta_star = *flags.delta_star;
        h.delta = standardize_delta(delta_star, h.s, int(K), int(p), 10000, seed).delta;
    } else {
        h.delta = flags.delta.value_or(0.0);
    }
    validate_hyper(h, p);
    validate_hyper_for_method(h, method);
    return {h, delta_star};
}

inline void write_fit_artifacts(const fs::path& out_dir, const ModelFit& fit,
                                const std::vector<std::string>& features,
                                const std::vector<std::string>& task_ids) {
    write_coef_csv(out_dir / "B.csv", fit.B, features, task_ids);
    write_coef_csv(out_dir / "Z.csv", fit.Z.cast<double>(), features, task_ids);
    std::ofstream os(out_dir / "intercepts.csv");
    require(os.good(), ErrorKind::io, "cannot write intercepts.csv");
    os << "task,intercept\n";
    for (Eigen::Index k = 0; k < fit.K(); ++k)
        os << task_ids[size_t(k)] << "," << csv::num(fit.intercepts[k]) << "\n";
}

inline ordered_json hyper_json(const Hyperparameters& h, Method method,
                               double delta_star) {
    ordered_json j;
    j["method"] = method_name(method);
    j["s"] = h.s;
    j["lambda"] = h.lambda;
    j["alpha"] = h.alpha;
    j["delta"] = h.delta;
    j["delta_star"] = delta_star;
    j["common_support"] = h.common_support;
    return j;
}

struct FitOptions {
    std::string data_dir;
    std::string out_dir;
    std::string method = "TS-SR";
    HyperFlags hyper;
    std::string config_file;
    std::uint64_t seed = 0;
    int threads = 0;
    int local_search_iterations = 50;
    bool warm_start = true;
};

inline int cmd_fit(const FitOptions& opt, std::ostream& log = std::cout) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = opt.config_file.empty() ? RunConfig()
                                            : RunConfig::from_file(opt.config_file);
    const SolverConfig sc = solver_config_from(cfg);
    cfg.reject_unknown_keys();

    const LoadedProblem loaded = load_problem_dir(opt.data_dir);
    const Method method = parse_method(opt.method);
    const auto [hyper, delta_star] = resolve_hyper(
        opt.hyper, method, loaded.problem.p(), loaded.problem.K(), opt.seed);

    ModelFit fit;
    if (opt.warm_start) {
        fit = final_fit(loaded.problem, hyper, sc, opt.local_search_iterations);
    } else {
        fit = solve(loaded.problem, hyper, sc);
        if (!hyper.common_support && opt.local_search_iterations > 0) {
            auto [cprob, centering] = center_problem(loaded.problem);
            ModelFit centered = fit;
            centered.intercepts.setZero();
            fit = local_search(centered, cprob, hyper, opt.local_search_iterations);
            recover_intercepts(fit, centering);
        }
    }

    fs::create_directories(opt.out_dir);
    std::vector<std::string> ids;
    for (const auto& t : loaded.problem.tasks) ids.push_back(t.id);
    write_fit_artifacts(opt.out_dir, fit, loaded.feature_names, ids);

    ordered_json summary;
    summary["command"] = "fit";
    summary["hyperparameters"] = hyper_json(hyper, method, delta_star);
    summary["objective"] = objective(loaded.problem, fit, hyper);
    summary["sweeps"] = fit.sweeps;
    summary["swaps_committed"] = fit.swaps_committed;
    summary["seed"] = opt.seed;
    summary["tasks"] = ids;
    {
        std::ofstream os(fs::path(opt.out_dir) / "summary.json");
        os << summary.dump(2) << "\n";
    }
    RunConfig resolved = cfg;
    resolved.set("method", method_name(method));
    resolved.set("s", std::to_string(hyper.s));
    resolved.set("lambda", csv::num(hyper.lambda));
    resolved.set("alpha", csv::num(hyper.alpha));
    resolved.set("delta", csv::num(hyper.delta));
    resolved.set("delta_star", csv::num(delta_star));
    resolved.set("seed", std::to_string(opt.seed));
    resolved.write_resolved(fs::path(opt.out_dir) / "resolved_config.txt");

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "fit: objective=" << csv::num(objective(loaded.problem, fit, hyper))
        << " sweeps=" << fit.sweeps << " swaps=" << fit.swaps_committed
        << " wall_seconds=" << secs << "\n";
    return 0;
}

struct TuneOptions {
    std::string data_dir;
    std::string out_dir;
    std::string method = "TS-SR";
    std::vector<int> s_grid;
    std::vector<double> lambda_grid;
    std::vector<double> alpha_grid;
    std::vector<double> delta_star_grid;
    int folds = 10;
    double pilot_alpha = 1e-3;
    std::string config_file;
    std::uint64_t seed = 0;
    int threads = 0;
    int local_search_iterations = 50;
};

inline TuningGrid build_grid(Method method, std::vector<int> s_grid,
                             std::vector<double> lambda_grid,
                             std::vector<double> alpha_grid,
                             std::vector<double> delta_star_grid,
                             Eigen::Index p) {
    const MethodMask mask = method_mask(method);
    TuningGrid grid;
    grid.method = method;
    grid.s_values = s_grid;
    grid.lambda_values = mask.lambda_tunable && !lambda_grid.empty()
                             ? lambda_grid
                             : std::vector<double>{0.0};
    grid.alpha_values = mask.alpha_tunable && !alpha_grid.empty()
                            ? alpha_grid
                            : std::vector<double>{0.0};
    grid.delta_star_values = mask.delta_tunable && !delta_star_grid.empty()
                                 ? delta_star_grid
                                 : std::vector<double>{0.0};
    if (!mask.lambda_tunable) grid.lambda_values = {0.0};
    if (!mask.alpha_tunable) grid.alpha_values = {0.0};
    if (!mask.delta_tunable) grid.delta_star_values = {0.0};
    validate_grid(grid, p);
    return grid;
}

inline int cmd_tune(const TuneOptions& opt, std::ostream& log = std::cout) {
    RunConfig cfg = opt.config_file.empty() ? RunConfig()
                                            : RunConfig::from_file(opt.config_file);
    const SolverConfig sc = solver_config_from(cfg);
    cfg.reject_unknown_keys();

    const LoadedProblem loaded = load_problem_dir(opt.data_dir);
    const Method method = parse_method(opt.method);
    require(!opt.s_grid.empty(), ErrorKind::config, "tune requires an s grid");
    const TuningGrid grid =
        build_grid(method, opt.s_grid, opt.lambda_grid, opt.alpha_grid,
                   opt.delta_star_grid, loaded.problem.p());
    const int threads = resolve_threads(opt.threads);

    const MethodMask mask = method_mask(method);
    const CVReport report =
        mask.n_tunable() == 3 && mask.delta_tunable
            ? two_stage_tune(loaded.problem, grid, opt.pilot_alpha, opt.folds,
                             opt.seed, sc, threads)
            : tune_cv(loaded.problem, grid, opt.folds, opt.seed, sc, threads);

    const CVPoint& sel = report.selected();
    const ModelFit fit = final_fit(loaded.problem, sel.hyper, sc,
                                   opt.local_search_iterations);

    fs::create_directories(opt.out_dir);
    {
        std::ofstream os(fs::path(opt.out_dir) / "cv_report.csv");
        write_cv_report(report, os);
    }
    std::vector<std::string> ids;
    for (const auto& t : loaded.problem.tasks) ids.push_back(t.id);
    write_fit_artifacts(opt.out_dir, fit, loaded.feature_names, ids);

    ordered_json summary;
    summary["command"] = "tune";
    summary["hyperparameters"] = hyper_json(sel.hyper, method, sel.delta_star);
    summary["mean_cv_error"] = sel.mean_error;
    summary["objective"] = objective(loaded.problem, fit, sel.hyper);
    summary["sweeps"] = fit.sweeps;
    summary["swaps_committed"] = fit.swaps_committed;
    summary["grid_points"] = report.points.size();
    summary["folds"] = opt.folds;
    summary["seed"] = opt.seed;
    {
        std::ofstream os(fs::path(opt.out_dir) / "summary.json");
        os << summary.dump(2) << "\n";
    }
    RunConfig resolved = cfg;
    resolved.set("method", method_name(method));
    resolved.set("folds", std::to_string(opt.folds));
    resolved.set("seed", std::to_string(opt.seed));
    resolved.write_resolved(fs::path(opt.out_dir) / "resolved_config.txt");

    log << "tune: selected s=" << sel.hyper.s << " lambda=" << sel.hyper.lambda
        << " alpha=" << sel.hyper.alpha << " delta=" << sel.hyper.delta
        << " (delta*=" << sel.delta_star << ") mean_cv_error=" << sel.mean_error
        << "\n";
    return 0;
}

struct SimulateOptions {
    std::string config_file;
    std::string out_dir;
    int replicates = 1;
    std::vector<std::string> methods{"TS-SR"};
    std::uint64_t seed = 0;
    int threads = 0;
    bool dump_data = false;
};

inline SimConfig sim_config_from(const RunConfig& cfg) {
    SimConfig sim;
    sim.K = int(cfg.get_int("K", sim.K));
    sim.p = int(cfg.get_int("p", sim.p));
    sim.n_train = int(cfg.get_int("n_train", sim.n_train));
    sim.n_test = int(cfg.get_int("n_test", sim.n_test));
    sim.rho = cfg.get_double("rho", sim.rho);
    sim.s = int(cfg.get_int("s", sim.s));
    sim.q = int(cfg.get_int("q", sim.q));
    sim.tau = cfg.get_double("tau", sim.tau);
    sim.sigma2_beta = cfg.get_double("sigma2_beta", sim.sigma2_beta);
    sim.mu_min = cfg.get_double("mu_min", sim.mu_min);
    sim.mu_max = cfg.get_double("mu_max", sim.mu_max);
    sim.share_mu = cfg.get_bool("share_mu", sim.share_mu);
    sim.intercept = cfg.get_double("intercept", sim.intercept);
    const std::string design = cfg.get_string("design", "main");
    if (design == "main")
        sim.design = SimDesign::main;
    else if (design == "partitioned")
        sim.design = SimDesign::partitioned;
    else
        fail(ErrorKind::config, "design must be 'main' or 'partitioned'");
    sim.common_card = int(cfg.get_int("common_card", sim.common_card));
    sim.hetero_max = int(cfg.get_int("hetero_max", sim.hetero_max));
    sim.p_z = cfg.get_double("p_z", sim.p_z);
    return sim;
}

struct ReplicateRow {
    int replicate;
    std::string method;
    std::string metric;
    double value;
};

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& log = std::cout) {
    require(!opt.config_file.empty(), ErrorKind::config,
            "simulate requires --config");
    RunConfig cfg = RunConfig::from_file(opt.config_file);
    const SimConfig sim_base = sim_config_from(cfg);
    const SolverConfig sc = solver_config_from(cfg);
    const int folds = int(cfg.get_int("folds", 10));
    const double pilot_alpha = cfg.get_double("pilot_alpha", 1e-3);
    const int ls_iters = int(cfg.get_int("local_search_iterations", 50));
    const int true_card = sim_base.design == SimDesign::main
                              ? sim_base.s
                              : sim_base.common_card + sim_base.hetero_max;
    const std::vector<int> s_grid =
        cfg.get_ints("s_grid", simulation_s_grid(true_card, sim_base.p));
    const std::vector<double> lambda_grid =
        cfg.get_doubles("lambda_grid", {0.01, 0.1, 1.0});
    const std::vector<double> alpha_grid =
        cfg.get_doubles("alpha_grid", {0.001, 0.01, 0.1});
    const std::vector<double> delta_star_grid =
        cfg.get_doubles("delta_star_grid", {0.0, 0.25, 1.0, 4.0});
    cfg.reject_unknown_keys();

    validate_sim_config(sim_base);
    std::vector<Method> methods;
    for (const auto& name : opt.methods) methods.push_back(parse_method(name));
    require(!methods.empty(), ErrorKind::config, "no methods given");

    const int threads = resolve_threads(opt.threads);
    const int R = opt.replicates;
    require(R >= 1, ErrorKind::config, "replicates must be >= 1");

    std::vector<std::vector<ReplicateRow>> rows(R);
    std::vector<std::string> failures(R);
    std::vector<std::uint64_t> rep_seeds(R);

    parallel_for(R, threads, [&](int r) {
        SimConfig sim = sim_base;
        sim.seed = derive_seed(opt.seed, std::uint64_t(r));
        rep_seeds[r] = sim.seed;
        try {
            const SimulatedStudy study = simulate(sim);
            if (opt.dump_data)
                write_study(fs::path(opt.out_dir) / "data" /
                                ("replicate" + std::to_string(r)),
                            study);
            for (size_t mi = 0; mi < methods.size(); ++mi) {
                const Method method = methods[mi];
                const MethodMask mask = method_mask(method);
                const TuningGrid grid =
                    build_grid(method, s_grid, lambda_grid, alpha_grid,
                               delta_star_grid, study.train.p());
                const std::uint64_t tune_seed = derive_seed(sim.seed, 31 + mi);
                const CVReport report =
                    mask.n_tunable() == 3 && mask.delta_tunable
                        ? two_stage_tune(study.train, grid, pilot_alpha, folds,
                                         tune_seed, sc, 1)
                        : tune_cv(study.train, grid, folds, tune_seed, sc, 1);
                const CVPoint& sel = report.selected();
                const ModelFit fit =
                    final_fit(study.train, sel.hyper, sc, ls_iters);
                const MetricRecord m = evaluate(fit, study.truth, study.test);
                auto add = [&](const std::string& name, double value) {
                    rows[r].push_back({r, method_name(method), name, value});
                };
                add("prediction_rmse", m.prediction_rmse);
                add("coefficient_rmse", m.coefficient_rmse);
                add("f1", m.f1);
                add("concordance", m.concordance);
                add("concordance_normalized", m.concordance_normalized);
                add("avg_tp", m.avg_tp);
                add("avg_fp", m.avg_fp);
                add("avg_fn", m.avg_fn);
                add("hetero_count", double(m.hetero_count));
                add("selected_s", double(sel.hyper.s));
                add("selected_lambda", sel.hyper.lambda);
                add("selected_alpha", sel.hyper.alpha);
                add("selected_delta", sel.hyper.delta);
                add("cv_error", sel.mean_error);
            }
        } catch (const std::exception& e) {
            failures[r] = e.what();
        }
    });

    fs::create_directories(opt.out_dir);
    {
        std::ofstream os(fs::path(opt.out_dir) / "results.csv");
        os << "replicate,method,metric,value\n";
        for (int r = 0; r < R; ++r)
            for (const auto& row : rows[r])
                os << row.replicate << "," << row.method << "," << row.metric
                   << "," << csv::num(row.value) << "\n";
    }
    {
        std::ofstream os(fs::path(opt.out_dir) / "seeds.csv");
        os << "replicate,seed\n";
        for (int r = 0; r < R; ++r) os << r << "," << rep_seeds[r] << "\n";
    }
    int n_failed = 0;
    {
        std::ofstream os(fs::path(opt.out_dir) / "failures.csv");
        os << "replicate,error\n";
        for (int r = 0; r < R; ++r)
            if (!failures[r].empty()) {
                ++n_failed;
                os << r << "," << failures[r] << "\n";
            }
    }
    RunConfig resolved = cfg;
    resolved.set("replicates", std::to_string(R));
    resolved.set("seed", std::to_string(opt.seed));
    {
        std::string names;
        for (const auto& m : opt.methods) names += (names.empty() ? "" : ",") + m;
        resolved.set("methods", names);
    }
    resolved.write_resolved(fs::path(opt.out_dir) / "resolved_config.txt");

    log << "simulate: " << R << " replicates, " << methods.size()
        << " methods, " << n_failed << " failures\n";
    return n_failed > 0 ? 1 : 0;
}

struct ExportMipOptions {
    std::string data_dir;
    std::string out_file;
    std::string method = "TS-SR";
    HyperFlags hyper;
    std::optional<double> big_m;
    std::uint64_t seed = 0;
};

inline int cmd_export_mip(const ExportMipOptions& opt,
                          std::ostream& log = std::cout) {
    const LoadedProblem loaded = load_problem_dir(opt.data_dir);
    const Method method = parse_method(opt.method);
    const auto [hyper, delta_star] = resolve_hyper(
        opt.hyper, method, loaded.problem.p(), loaded.problem.K(), opt.seed);
    (void)delta_star;
    const MipMode mode = hyper.common_support ? MipMode::common
                                              : MipMode::heterogeneous;
    const double M = opt.big_m ? *opt.big_m : choose_big_m(loaded.problem, hyper);
    std::ofstream os(opt.out_file);
    require(os.good(), ErrorKind::io, "cannot write '" + opt.out_file + "'");
    const MipSummary summary = export_mip(loaded.problem, hyper, M, mode, os);
    log << "export-mip: " << summary.n_binaries << " binaries, "
        << summary.n_continuous << " continuous, " << summary.n_constraints
        << " constraints, M=" << csv::num(M) << "\n";
    return 0;
}

struct OracleOptions {
    std::string data_dir;
    HyperFlags hyper;
    bool common_support = false;
    std::string compare_dir;
    OracleLimits limits;
    std::uint64_t seed = 0;
};

inline int cmd_oracle(const OracleOptions& opt, std::ostream& log = std::cout) {
    const LoadedProblem loaded = load_problem_dir(opt.data_dir);
    Hyperparameters hyper;
    hyper.s = opt.hyper.s > 0 ? opt.hyper.s : 1;
    hyper.lambda = opt.hyper.lambda.value_or(0.0);
    hyper.alpha = opt.hyper.alpha.value_or(0.0);
    hyper.common_support = opt.common_support;
    if (opt.hyper.delta_star) {
        hyper.delta = standardize_delta(*opt.hyper.delta_star, hyper.s,
                                        int(loaded.problem.K()),
                                        int(loaded.problem.p()), 10000, opt.seed)
                          .delta;
    } else {
        hyper.delta = opt.hyper.delta.value_or(0.0);
    }
    validate_hyper(hyper, loaded.problem.p());

    const OracleResult res = solve_exact(loaded.problem, hyper, opt.limits);
    log << "oracle: objective=" << csv::num(res.objective)
        << " supports_enumerated=" << res.supports_enumerated << "\n";
    for (Eigen::Index k = 0; k < res.fit.K(); ++k) {
        log << "oracle: support[" << loaded.problem.tasks[k].id << "] =";
        for (Eigen::Index j = 0; j < res.fit.p(); ++j)
            if (res.fit.Z(j, k)) log << " " << loaded.feature_names[size_t(j)];
        log << "\n";
    }
    if (!opt.compare_dir.empty()) {
        ModelFit heur;
        heur.B = read_coef_csv(fs::path(opt.compare_dir) / "B.csv");
        heur.Z = read_coef_csv(fs::path(opt.compare_dir) / "Z.csv")
                     .array()
                     .round()
                     .cast<int>();
        std::ifstream in(fs::path(opt.compare_dir) / "intercepts.csv");
        require(in.good(), ErrorKind::io, "cannot open intercepts.csv");
        std::string line;
        std::getline(in, line);  // header
        std::vector<double> icepts;
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto cells = csv::split_line(line);
            require(cells.size() == 2, ErrorKind::schema,
                    "intercepts.csv:" + std::to_string(line_no) + ": ragged row");
            icepts.push_back(csv::parse_number(cells[1], "intercepts.csv", line_no));
        }
        heur.intercepts =
            Eigen::Map<VectorXd>(icepts.data(), Eigen::Index(icepts.size()));
        heur.refresh_averages();
        const double heur_obj = objective(loaded.problem, heur, hyper);
        log << "oracle: heuristic_objective=" << csv::num(heur_obj)
            << " gap=" << csv::num(heur_obj - res.objective) << "\n";
    }
    return 0;
}

}  // namespace cli
}  // namespace smtl
