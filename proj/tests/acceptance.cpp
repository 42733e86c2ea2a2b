// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier replicate studies run with a fixed internal thread count;
// results are independent of it by construction.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "smtl/cli.hpp"
#include "smtl/smtl.hpp"

using namespace smtl;
namespace fs = std::filesystem;

namespace {

constexpr int kThreads = 4;
int g_failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
    std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

MTLProblem random_noise_problem(std::uint64_t seed, int K, int p, int n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MTLProblem prob;
    for (int k = 0; k < K; ++k) {
        TaskDataset t;
        t.id = "t" + std::to_string(k + 1);
        t.X.resize(n, p);
        t.y.resize(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) t.X(i, j) = gauss(rng);
            t.y[i] = gauss(rng);
        }
        prob.tasks.push_back(std::move(t));
    }
    return prob;
}

Hyperparameters hyper_for(Method method, int s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pen(0.0, 0.5);
    std::uniform_real_distribution<double> dval(0.0, 2.0);
    const MethodMask mask = method_mask(method);
    Hyperparameters h;
    h.s = s;
    h.common_support = mask.common_support;
    if (mask.lambda_tunable) h.lambda = pen(rng);
    if (mask.alpha_tunable) h.alpha = pen(rng);
    if (mask.delta_tunable) h.delta = dval(rng);
    return h;
}

// ---------------------------------------------------------------- criterion 1
void criterion_descent_feasibility() {
    const auto t0 = std::chrono::steady_clock::now();
    const Method all_methods[] = {Method::TsSr,   Method::Bbar,
                                  Method::ZbarL2, Method::ZbarBbar,
                                  Method::CsL2,   Method::CsBbar};
    int instances = 0, violations = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> pk(5, 30), nk(8, 40), kk(1, 3), sk(1, 5);
        const int K = kk(rng), p = pk(rng), n = nk(rng);
        const int s = std::min(sk(rng), p);
        const MTLProblem prob = random_noise_problem(seed + 1000, K, p, n);
        for (Method method : all_methods) {
            const Hyperparameters h = hyper_for(method, s, rng);
            const ModelFit f = solve(prob, h);
            ++instances;
            try {
                validate_fit(f, p, K, h);
            } catch (const Error&) {
                ++violations;
                continue;
            }
            for (size_t i = 1; i < f.objective_trace.size(); ++i)
                if (f.objective_trace[i] > f.objective_trace[i - 1] + 1e-10) {
                    ++violations;
                    break;
                }
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream detail;
    detail << instances << " fits, " << violations << " violations, " << secs
           << "s";
    report(1, "descent + feasibility across all methods",
           violations == 0 && secs < 60.0, detail.str());
}

// ---------------------------------------------------------------- criterion 2
void criterion_swap_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    long long sampled = 0, failures = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; sampled < 10000; ++seed) {
        const int K = 2 + int(seed % 2), p = 9, s = 3;
        const MTLProblem prob = random_noise_problem(seed, K, p, 12);
        std::mt19937_64 rng(seed + 77);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> pen(0.0, 1.0);
        ModelFit fit = zero_fit(p, K);
        for (int k = 0; k < K; ++k) {
            fit.intercepts[k] = 0.3 * gauss(rng);
            for (int j : sample_without_replacement(p, s, rng)) {
                fit.Z(j, k) = 1;
                fit.B(j, k) = gauss(rng);
            }
        }
        fit.refresh_averages();
        Hyperparameters h;
        h.s = s;
        h.lambda = pen(rng);
        h.alpha = pen(rng);
        h.delta = pen(rng);
        const double before = objective(prob, fit, h);
        for (int k = 0; k < K; ++k)
            for (int j_out = 0; j_out < p; ++j_out) {
                if (!fit.Z(j_out, k)) continue;
                for (int j_in = 0; j_in < p; ++j_in) {
                    if (fit.Z(j_in, k)) continue;
                    const SwapEvaluation ev =
                        evaluate_swap(fit, prob, h, k, j_out, j_in);
                    ModelFit moved = fit;
                    moved.B(j_out, k) = 0.0;
                    moved.Z(j_out, k) = 0;
                    moved.B(j_in, k) = ev.b_opt;
                    moved.Z(j_in, k) = 1;
                    moved.refresh_averages();
                    const double direct = objective(prob, moved, h) - before;
                    const double err = std::abs(ev.delta_total - direct);
                    worst = std::max(worst, err / (1.0 + std::abs(before)));
                    if (err > 1e-9 * (1.0 + std::abs(before))) ++failures;
                    ++sampled;
                }
            }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream detail;
    detail << sampled << " swaps, worst rel err " << worst << ", " << secs << "s";
    report(2, "swap-delta closed form vs direct evaluation",
           failures == 0 && secs < 60.0, detail.str());
}

// ---------------------------------------------------------------- criterion 3
void criterion_global_optimality() {
    const auto t0 = std::chrono::steady_clock::now();
    const int trials = 100;
    std::vector<double> gaps(trials, 0.0);
    std::vector<char> beat(trials, 0);
    parallel_for(trials, kThreads, [&](int trial) {
        const std::uint64_t seed = trial;
        const int p = 6, s = 2, n = 12, K = 2;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> mag(0.5, 1.5);
        MTLProblem prob;
        for (int k = 0; k < K; ++k) {
            TaskDataset t;
            t.id = "t" + std::to_string(k);
            t.X.resize(n, p);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < p; ++j) t.X(i, j) = gauss(rng);
            VectorXd beta = VectorXd::Zero(p);
            beta[0] = (gauss(rng) > 0 ? 1 : -1) * mag(rng);
            beta[2 + k] = (gauss(rng) > 0 ? 1 : -1) * mag(rng);
            t.y = t.X * beta;
            for (int i = 0; i < n; ++i) t.y[i] += 0.5 * gauss(rng);
            prob.tasks.push_back(std::move(t));
        }
        std::uniform_real_distribution<double> pen(0.0, 0.3);
        std::uniform_real_distribution<double> dstar(0.0, 1.0);
        Hyperparameters h;
        h.s = s;
        if (trial % 2 == 0)
            h.lambda = pen(rng);
        else
            h.alpha = pen(rng);
        h.delta = standardize_delta(dstar(rng), s, K, p).delta;
        const OracleResult oracle = solve_exact(prob, h);
        SolverConfig cfg;
        cfg.rel_tol = 1e-12;
        const ModelFit heur = final_fit(prob, h, cfg, 50);
        const double gap = objective(prob, heur, h) - oracle.objective;
        gaps[trial] = gap;
        beat[trial] = gap < -1e-9 ? 1 : 0;
    });
    int optimal = 0, beats = 0;
    for (int i = 0; i < trials; ++i) {
        if (gaps[i] <= 1e-6) ++optimal;
        if (beat[i]) ++beats;
    }
    int bins[4] = {0, 0, 0, 0};
    for (double g : gaps) {
        if (g <= 1e-6)
            ++bins[0];
        else if (g <= 1e-3)
            ++bins[1];
        else if (g <= 1e-1)
            ++bins[2];
        else
            ++bins[3];
    }
    std::printf(
        "  gap histogram: <=1e-6: %d, (1e-6,1e-3]: %d, (1e-3,0.1]: %d, >0.1: %d\n",
        bins[0], bins[1], bins[2], bins[3]);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream detail;
    detail << optimal << "/" << trials << " at the enumeration optimum, " << beats
           << " impossible beats, " << secs << "s";
    report(3, "block CD + local search vs exhaustive enumeration",
           optimal >= 80 && beats == 0 && secs < 300.0, detail.str());
}

// ---------------------------------------------------------------- criterion 4
void criterion_common_support_limit() {
    const int reps = 20;
    std::vector<int> hetero_large(reps, -1), hetero_zero(reps, -1);
    parallel_for(reps, kThreads, [&](int r) {
        SimConfig sim;
        sim.K = 4;
        sim.p = 50;
        sim.n_train = 50;
        sim.n_test = 10;
        sim.s = 10;
        sim.q = 10;  // s/q = 1: common-support truth
        sim.tau = 1.0;
        sim.sigma2_beta = 1.0;
        sim.seed = derive_seed(404, r);
        const SimulatedStudy study = simulate(sim);
        Hyperparameters strong;
        strong.s = 10;
        strong.alpha = 1e-3;
        strong.delta = 1e3;  // standardized delta >= 1e3
        const ModelFit f_strong = solve(study.train, strong);
        hetero_large[r] = support_sets(f_strong.Z).hetero_count;
        Hyperparameters off = strong;
        off.delta = 0.0;
        const ModelFit f_off = solve(study.train, off);
        hetero_zero[r] = support_sets(f_off.Z).hetero_count;
    });
    int always_common = 0, scattered = 0;
    for (int r = 0; r < reps; ++r) {
        if (hetero_large[r] == 0) ++always_common;
        if (hetero_zero[r] > 0) ++scattered;
    }
    std::ostringstream detail;
    detail << "delta=1e3: " << always_common << "/" << reps
           << " with hetero_count 0; delta=0: " << scattered << "/" << reps
           << " with hetero_count > 0";
    report(4, "large delta forces common support on common-support truth",
           always_common == reps && scattered >= reps / 2, detail.str());
}

// ---------------------------------------------------------------- criterion 5
struct CellResult {
    double rmse_zbar = 0, rmse_tssr = 0, f1_zbar = 0, f1_csl2 = 0;
};

CellResult run_cell(int q, int reps) {
    std::vector<CellResult> per_rep(reps);
    parallel_for(reps, kThreads, [&](int r) {
        SimConfig sim;
        sim.K = 4;
        sim.p = 50;
        sim.n_train = 50;
        sim.n_test = 50;
        sim.s = 5;
        sim.q = q;
        sim.tau = 1.0;
        sim.sigma2_beta = 50.0;
        sim.seed = derive_seed(505 + q, r);
        const SimulatedStudy study = simulate(sim);
        const std::vector<int> s_grid{3, 4, 5, 6, 7};
        const std::vector<double> alpha_grid{1e-3, 1e-2, 1e-1};
        const std::vector<double> dstar_grid{0.0, 0.25, 1.0, 4.0};
        SolverConfig cfg;
        auto tuned_fit = [&](Method method) {
            TuningGrid grid = cli::build_grid(method, s_grid, {}, alpha_grid,
                                              dstar_grid, sim.p);
            const MethodMask mask = method_mask(method);
            const std::uint64_t seed = derive_seed(sim.seed, 7);
            const CVReport rep =
                mask.n_tunable() == 3 && mask.delta_tunable
                    ? two_stage_tune(study.train, grid, 1e-3, 10, seed, cfg, 1)
                    : tune_cv(study.train, grid, 10, seed, cfg, 1);
            return final_fit(study.train, rep.selected().hyper, cfg, 50);
        };
        const MetricRecord zbar =
            evaluate(tuned_fit(Method::ZbarL2), study.truth, study.test);
        const MetricRecord tssr =
            evaluate(tuned_fit(Method::TsSr), study.truth, study.test);
        const MetricRecord csl2 =
            evaluate(tuned_fit(Method::CsL2), study.truth, study.test);
        per_rep[r] = {zbar.prediction_rmse, tssr.prediction_rmse, zbar.f1,
                      csl2.f1};
    });
    CellResult mean;
    for (const auto& rr : per_rep) {
        mean.rmse_zbar += rr.rmse_zbar / reps;
        mean.rmse_tssr += rr.rmse_tssr / reps;
        mean.f1_zbar += rr.f1_zbar / reps;
        mean.f1_csl2 += rr.f1_csl2 / reps;
    }
    return mean;
}

void criterion_method_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    const int reps = 20;
    const CellResult half = run_cell(10, reps);  // s/q = 0.5
    const CellResult full = run_cell(5, reps);   // s/q = 1.0
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool rmse_ok =
        half.rmse_zbar <= half.rmse_tssr && full.rmse_zbar <= full.rmse_tssr;
    const bool f1_ok = half.f1_zbar >= half.f1_csl2;
    std::ostringstream detail;
    detail.precision(4);
    detail << "s/q=0.5: rmse Zbar+L2 " << half.rmse_zbar << " vs TS-SR "
           << half.rmse_tssr << ", f1 Zbar+L2 " << half.f1_zbar << " vs CS+L2 "
           << half.f1_csl2 << "; s/q=1.0: rmse " << full.rmse_zbar << " vs "
           << full.rmse_tssr << "; " << secs << "s";
    report(5, "support-regularized method ordering at desk scale",
           rmse_ok && f1_ok && secs < 1800.0, detail.str());
}

// ---------------------------------------------------------------- criterion 6
// Unit coefficients with opposite signs on the shared coordinates,
// sigma^2 = 5, n_k = 25. At these sizes the true support is not even the
// global optimum of the estimator: the identifiability diagnostic below
// counts replicates where another support strictly beats the truth in
// penalized objective, so the perfect-F1 bar cannot be reached here. The
// |beta|=4 info line separates that ceiling from the method ordering.
void run_sign_flip_cell(double magnitude, int reps, std::vector<double>& f1_zbar,
                        std::vector<double>& f1_bbar,
                        std::vector<int>& truth_suboptimal) {
    parallel_for(reps, kThreads, [&](int r) {
        const int p = 50, s = 7, q = 10, n = 25, K = 2;
        const double sigma2 = 5.0, rho = 0.5;
        const std::uint64_t seed = derive_seed(606, r);
        auto rng = make_rng(derive_seed(seed, 2));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const MatrixXi pool = draw_supports_main(K, s, q, derive_seed(seed, 1));
        MatrixXi Z = MatrixXi::Zero(p, K);
        Z.topRows(pool.rows()) = pool;
        // Fixed-magnitude coefficients; shared coordinates get opposite signs.
        MatrixXd B = MatrixXd::Zero(p, K);
        for (int j = 0; j < p; ++j) {
            if (Z(j, 0) && Z(j, 1)) {
                const double sign = gauss(rng) > 0 ? 1.0 : -1.0;
                B(j, 0) = magnitude * sign;
                B(j, 1) = -magnitude * sign;
            } else {
                for (int k = 0; k < K; ++k)
                    if (Z(j, k))
                        B(j, k) = (gauss(rng) > 0 ? 1.0 : -1.0) * magnitude;
            }
        }
        const CovarianceModel cov = make_covariance(p, rho);
        MTLProblem train;
        auto data_rng = make_rng(derive_seed(seed, 3));
        for (int k = 0; k < K; ++k) {
            TaskDataset t;
            t.id = "t" + std::to_string(k + 1);
            MatrixXd G(n, p);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < p; ++j) G(i, j) = gauss(data_rng);
            t.X = G * cov.chol.transpose();
            t.y = t.X * B.col(k);
            for (int i = 0; i < n; ++i)
                t.y[i] += std::sqrt(sigma2) * gauss(data_rng);
            train.tasks.push_back(std::move(t));
        }
        SimulationTruth truth;
        truth.B_star = B;
        truth.Z_star = Z;
        truth.intercepts = VectorXd::Zero(K);
        truth.sigma2 = VectorXd::Constant(K, sigma2);

        SolverConfig cfg;
        const std::vector<int> s_fixed{s};  // cardinality pinned at the truth
        ModelFit zbar_fit;
        auto tuned_fit = [&](Method method) {
            TuningGrid grid = cli::build_grid(
                method, s_fixed, {0.01, 0.1, 1.0}, {1e-3, 1e-2},
                {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}, p);
            const MethodMask mask = method_mask(method);
            const std::uint64_t tseed = derive_seed(seed, 9);
            const CVReport rep =
                mask.n_tunable() == 3 && mask.delta_tunable
                    ? two_stage_tune(train, grid, 1e-3, 10, tseed, cfg, 1)
                    : tune_cv(train, grid, 10, tseed, cfg, 1);
            return final_fit(train, rep.selected().hyper, cfg, 50);
        };
        zbar_fit = tuned_fit(Method::ZbarL2);
        f1_zbar[r] = evaluate(zbar_fit, truth, train).f1;
        f1_bbar[r] = evaluate(tuned_fit(Method::Bbar), truth, train).f1;

        // Identifiability: exact coefficients on the fitted vs true support.
        auto [cprob, centering] = center_problem(train);
        Hyperparameters plain;
        plain.s = s;
        plain.alpha = 1e-3;
        const double at_truth = solve_restricted(cprob, plain, Z).objective;
        const double at_fit =
            solve_restricted(cprob, plain, zbar_fit.Z).objective;
        if (at_fit < at_truth - 1e-9) truth_suboptimal[r] = 1;
    });
}

void criterion_sign_flip_recovery() {
    const int reps = 20;
    std::vector<double> f1_zbar(reps, 0.0), f1_bbar(reps, 0.0);
    std::vector<int> truth_suboptimal(reps, 0);
    run_sign_flip_cell(1.0, reps, f1_zbar, f1_bbar, truth_suboptimal);
    int perfect = 0, unidentifiable = 0;
    double mean_zbar = 0, mean_bbar = 0;
    for (int r = 0; r < reps; ++r) {
        if (f1_zbar[r] == 1.0) ++perfect;
        unidentifiable += truth_suboptimal[r];
        mean_zbar += f1_zbar[r] / reps;
        mean_bbar += f1_bbar[r] / reps;
    }
    // Secondary diagnostic at a coefficient scale where the true support is
    // the global optimum: shows the directional ordering independent of the
    // identifiability ceiling above. Informational only.
    std::vector<double> f1_zbar4(reps, 0.0), f1_bbar4(reps, 0.0);
    std::vector<int> subopt4(reps, 0);
    run_sign_flip_cell(4.0, reps, f1_zbar4, f1_bbar4, subopt4);
    int perfect4 = 0, unident4 = 0;
    double mean_zbar4 = 0, mean_bbar4 = 0;
    for (int r = 0; r < reps; ++r) {
        if (f1_zbar4[r] == 1.0) ++perfect4;
        unident4 += subopt4[r];
        mean_zbar4 += f1_zbar4[r] / reps;
        mean_bbar4 += f1_bbar4[r] / reps;
    }
    std::printf(
        "  info: at |beta|=4 (identifiable), Zbar+L2 perfect %d/%d mean %.4f vs "
        "Bbar mean %.4f, truth beaten %d/%d\n",
        perfect4, reps, mean_zbar4, mean_bbar4, unident4, reps);

    std::ostringstream detail;
    detail.precision(4);
    detail << "Zbar+L2 perfect F1 " << perfect << "/" << reps << ", mean "
           << mean_zbar << "; Bbar mean " << mean_bbar
           << "; true support beaten in objective by the fitted one in "
           << unidentifiable << "/" << reps << " replicates";
    report(6, "sign-flipped instance: support recovery ordering",
           perfect >= int(0.6 * reps) && mean_zbar > mean_bbar, detail.str());
}

// ---------------------------------------------------------------- criterion 7
void criterion_tau_star() {
    const DeltaStandardization closed = standardize_delta(1.0, 5, 4, 100);
    const bool closed_ok = closed.closed_form && closed.tau_star == 15.0;

    double exact = 0.0;
    const int p = 3, s = 2, K = 2;
    const std::vector<std::vector<int>> subsets{{0, 1}, {0, 2}, {1, 2}};
    for (const auto& a : subsets)
        for (const auto& b : subsets) {
            std::vector<int> count(p, 0);
            for (int j : a) ++count[j];
            for (int j : b) ++count[j];
            double v = 0.0;
            for (int j = 0; j < p; ++j)
                v += count[j] - double(count[j]) * count[j] / K;
            exact = std::max(exact, v);
        }
    const DeltaStandardization mc = standardize_delta(1.0, s, K, p, 10000, 11);
    const bool mc_ok = !mc.closed_form && mc.tau_star == exact;
    std::ostringstream detail;
    detail << "closed form tau*=" << closed.tau_star << ", MC tau*=" << mc.tau_star
           << " vs exact " << exact;
    report(7, "tau* closed form and Monte Carlo agreement", closed_ok && mc_ok,
           detail.str());
}

// ---------------------------------------------------------------- criterion 8
void criterion_mip_fidelity() {
    int bad_value = 0, bad_counts = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int K = 2, p = 4 + int(seed % 3), n = 8, s = 2;
        const MTLProblem prob = random_noise_problem(seed + 800, K, p, n);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> pen(0.0, 0.5);
        Hyperparameters h;
        h.s = s;
        if (seed % 2 == 0)
            h.lambda = pen(rng);
        else
            h.alpha = pen(rng);
        h.delta = pen(rng);
        const OracleResult oracle = solve_exact(prob, h);
        const double M = std::max(choose_big_m(prob, h),
                                  oracle.fit.B.cwiseAbs().maxCoeff() + 1.0);
        std::ostringstream os;
        const MipSummary summary =
            export_mip(prob, h, M, MipMode::heterogeneous, os);
        if (summary.n_binaries != p * K || summary.n_continuous != p * K + p + p ||
            summary.n_constraints != 2 * p * K + K + p)
            ++bad_counts;
        const LpModel model = parse_lp(os.str());
        const MipSummary parsed = model.summary();
        if (parsed.n_binaries != summary.n_binaries ||
            parsed.n_continuous != summary.n_continuous ||
            parsed.n_constraints != summary.n_constraints)
            ++bad_counts;
        const double lp_value =
            model.evaluate(mip_assignment(oracle.fit, MipMode::heterogeneous));
        const double direct = objective(prob, oracle.fit, h);
        if (std::abs(lp_value - direct) > 1e-8 * (1.0 + std::abs(direct)))
            ++bad_value;
    }
    std::ostringstream detail;
    detail << "20 instances, " << bad_value << " value mismatches, " << bad_counts
           << " count mismatches";
    report(8, "exported model fidelity and formulation counts",
           bad_value == 0 && bad_counts == 0, detail.str());
}

// ---------------------------------------------------------------- criterion 9
std::string slurp_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool run_cli(const std::string& args) {
    const std::string cmd =
        std::string(SMTL_CLI_BINARY) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

void criterion_determinism() {
    const fs::path base = fs::temp_directory_path() / "smtl_acceptance_det";
    fs::remove_all(base);
    fs::create_directories(base);

    SimConfig sim;
    sim.K = 2;
    sim.p = 12;
    sim.n_train = 30;
    sim.n_test = 10;
    sim.s = 3;
    sim.q = 5;
    sim.seed = 99;
    write_study(base / "study", simulate(sim));
    const std::string data = (base / "study" / "train").string();

    bool ok = true;
    std::string why;
    std::vector<std::string> fit_dumps;
    for (int threads : {1, 4, 1, 4}) {
        const fs::path out = base / ("fit_" + std::to_string(fit_dumps.size()));
        if (!run_cli("fit --data " + data + " --out " + out.string() +
                     " --method Zbar+L2 --s 3 --alpha 0.01 --delta-star 0.5 "
                     "--seed 7 --threads " +
                     std::to_string(threads))) {
            ok = false;
            why = "fit invocation failed";
            break;
        }
        fit_dumps.push_back(slurp_file(out / "B.csv") + slurp_file(out / "Z.csv") +
                            slurp_file(out / "intercepts.csv") +
                            slurp_file(out / "summary.json") +
                            slurp_file(out / "resolved_config.txt"));
    }
    for (size_t i = 1; ok && i < fit_dumps.size(); ++i)
        if (fit_dumps[i] != fit_dumps[0]) {
            ok = false;
            why = "fit outputs differ across runs/threads";
        }

    if (ok) {
        std::ofstream(base / "sim.cfg")
            << "K=2\np=10\nn_train=24\nn_test=16\ns=2\nq=4\ntau=0.5\n"
               "sigma2_beta=1\ns_grid=1,2,3\nalpha_grid=0.01\n"
               "delta_star_grid=0,0.5\nfolds=3\n";
        std::vector<std::string> sim_dumps;
        for (int threads : {1, 4}) {
            const fs::path out = base / ("sim_" + std::to_string(sim_dumps.size()));
            if (!run_cli("simulate --config " + (base / "sim.cfg").string() +
                         " --out " + out.string() +
                         " --replicates 4 --methods TS-SR,Zbar+L2 --seed 3 "
                         "--threads " +
                         std::to_string(threads))) {
                ok = false;
                why = "simulate invocation failed";
                break;
            }
            sim_dumps.push_back(slurp_file(out / "results.csv") +
                                slurp_file(out / "seeds.csv"));
        }
        for (size_t i = 1; ok && i < sim_dumps.size(); ++i)
            if (sim_dumps[i] != sim_dumps[0]) {
                ok = false;
                why = "simulate outputs differ across thread counts";
            }
    }
    report(9, "byte-identical CLI outputs across repeats and thread counts", ok,
           ok ? "fit x4 and simulate x2 runs identical" : why);
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_descent_feasibility();
    criterion_swap_oracle();
    criterion_global_optimality();
    criterion_common_support_limit();
    criterion_method_ordering();
    criterion_sign_flip_recovery();
    criterion_tau_star();
    criterion_mip_fidelity();
    criterion_determinism();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d of 9 criteria failed (total %.1fs)\n", g_failures, secs);
    return g_failures == 0 ? 0 : 1;
}
