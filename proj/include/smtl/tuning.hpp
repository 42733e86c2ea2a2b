#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "smtl/local_search.hpp"
#include "smtl/rng.hpp"
#include "smtl/solver.hpp"
#include "smtl/threads.hpp"
#include "smtl/types.hpp"

namespace smtl {

/// Grid of candidate hyperparameter values. Delta values are given on the
/// pre-standardization scale (delta*); untunable parameters must hold the
/// single value 0.
struct TuningGrid {
    std::vector<int> s_values;
    std::vector<double> lambda_values{0.0};
    std::vector<double> alpha_values{0.0};
    std::vector<double> delta_star_values{0.0};
    Method method = Method::TsSr;
};

inline void validate_grid(const TuningGrid& g, Eigen::Index p) {
    const MethodMask mask = method_mask(g.method);
    require(!g.s_values.empty(), ErrorKind::config, "s grid must be nonempty");
    for (int s : g.s_values)
        require(s >= 1 && s <= p, ErrorKind::config,
                "grid s value " + std::to_string(s) + " outside [1, p]");
    auto check = [&](const std::vector<double>& vals, bool tunable,
                     const char* name) {
        require(!vals.empty(), ErrorKind::config,
                std::string(name) + " grid must be nonempty");
        for (double v : vals)
            require(std::isfinite(v) && v >= 0.0, ErrorKind::config,
                    std::string(name) + " grid values must be finite and >= 0");
        if (!tunable)
            require(vals.size() == 1 && vals[0] == 0.0, ErrorKind::config,
                    std::string(name) + " is not tunable for " +
                        method_name(g.method) + "; its grid must be {0}");
    };
    check(g.lambda_values, mask.lambda_tunable, "lambda");
    check(g.alpha_values, mask.alpha_tunable, "alpha");
    check(g.delta_star_values, mask.delta_tunable, "delta");
    // Never both shrinkage penalties at once.
    require(!(mask.lambda_tunable && mask.alpha_tunable), ErrorKind::config,
            "no method tunes lambda and alpha together");
}

/// The simulation-study default from a known truth support size.
inline std::vector<int> simulation_s_grid(int s_true, Eigen::Index p) {
    std::vector<int> out;
    for (int s = s_true - 3; s <= s_true + 3; ++s)
        if (s >= 1 && s <= p) out.push_back(s);
    return out;
}

struct DeltaStandardization {
    double delta = 0.0;
    double tau_star = 0.0;
    bool closed_form = false;
    bool disabled = false;  // K == 1 or tau* == 0: penalty vacuous, delta*
                            // passed through unchanged
};

/// delta = delta* / tau*, where tau* is the largest attainable value of the
/// support-heterogeneity penalty over exact-s supports. Closed form s(K-1)
/// when sK <= p; otherwise a seeded Monte Carlo maximum.
inline DeltaStandardization standardize_delta(double delta_star, int s, int K,
                                              int p, int mc_samples = 10000,
                                              std::uint64_t seed = 0) {
    require(s >= 1 && K >= 1 && p >= 1 && s <= p, ErrorKind::config,
            "standardize_delta needs 1 <= s <= p and K >= 1");
    DeltaStandardization out;
    if (K == 1) {
        out.delta = delta_star;
        out.disabled = true;
        return out;
    }
    if (s * K <= p) {
        out.tau_star = double(s) * double(K - 1);
        out.closed_form = true;
    } else {
        auto rng = make_rng(derive_seed(seed, 0xD5));
        std::vector<int> count(p);
        double best = 0.0;
        for (int it = 0; it < mc_samples; ++it) {
            std::fill(count.begin(), count.end(), 0);
            for (int k = 0; k < K; ++k)
                for (int j : sample_without_replacement(p, s, rng)) ++count[j];
            double v = 0.0;
            for (int j = 0; j < p; ++j)
                v += count[j] - double(count[j]) * count[j] / double(K);
            best = std::max(best, v);
        }
        out.tau_star = best;
    }
    if (out.tau_star <= 0.0) {  // s == p forces identical supports
        out.delta = delta_star;
        out.disabled = true;
        return out;
    }
    out.delta = delta_star / out.tau_star;
    return out;
}

/// One visited grid point: hyperparameters on the solver scale plus the
/// pre-standardization delta*.
struct GridPoint {
    Hyperparameters hyper;
    double delta_star = 0.0;
    int stage = 0;
};

/// Path order: s in caller order, lambda low to high or alpha high to low,
/// delta low to high innermost. Delta stays on the delta* scale here.
inline std::vector<GridPoint> order_grid(const TuningGrid& grid) {
    const MethodMask mask = method_mask(grid.method);
    std::vector<double> lam = grid.lambda_values;
    std::vector<double> alp = grid.alpha_values;
    std::vector<double> del = grid.delta_star_values;
    std::sort(lam.begin(), lam.end());
    std::sort(alp.begin(), alp.end(), std::greater<double>());
    std::sort(del.begin(), del.end());

    std::vector<GridPoint> out;
    for (int s : grid.s_values)
        for (double l : lam)
            for (double a : alp)
                for (double d : del) {
                    GridPoint pt;
                    pt.hyper.s = s;
                    pt.hyper.lambda = l;
                    pt.hyper.alpha = a;
                    pt.hyper.common_support = mask.common_support;
                    pt.delta_star = d;
                    out.push_back(pt);
                }
    return out;
}

namespace detail {

/// Keep the s largest-|beta| coefficients per task (aggregated squared
/// magnitudes in common mode); ties break to the smaller index.
inline ModelFit threshold_to_s(const ModelFit& fit, int s, bool common) {
    const Eigen::Index p = fit.p(), K = fit.K();
    ModelFit out = fit;
    out.objective_trace.clear();
    out.B.setZero();
    out.Z.setZero();
    if (common) {
        VectorXd score = fit.B.array().square().matrix().rowwise().sum();
        std::vector<int> order;
        for (Eigen::Index j = 0; j < p; ++j)
            if (score[j] > 0.0) order.push_back(int(j));
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (score[a] != score[b]) return score[a] > score[b];
            return a < b;
        });
        if (int(order.size()) > s) order.resize(s);
        for (int j : order)
            for (Eigen::Index k = 0; k < K; ++k) {
                out.B(j, k) = fit.B(j, k);
                out.Z(j, k) = 1;
            }
    } else {
        for (Eigen::Index k = 0; k < K; ++k) {
            std::vector<int> order;
            for (Eigen::Index j = 0; j < p; ++j)
                if (fit.B(j, k) != 0.0 || fit.Z(j, k)) order.push_back(int(j));
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double ba = std::abs(fit.B(a, k)), bb = std::abs(fit.B(b, k));
                if (ba != bb) return ba > bb;
                return a < b;
            });
            if (int(order.size()) > s) order.resize(s);
            for (int j : order) {
                out.B(j, k) = fit.B(j, k);
                out.Z(j, k) = 1;
            }
        }
    }
    out.refresh_averages();
    return out;
}

}  // namespace detail

/// Relaxed-support seed: a block-CD fit at budget min(4s, p), re-thresholded
/// to s per task. No local search.
inline ModelFit warm_start(const MTLProblem& prob, const Hyperparameters& hyper,
                           const SolverConfig& config = {}) {
    validate_problem(prob);
    validate_hyper(hyper, prob.p());
    Hyperparameters relaxed = hyper;
    relaxed.s = int(std::min<Eigen::Index>(4LL * hyper.s, prob.p()));
    const ModelFit wide = solve(prob, relaxed, config);
    return detail::threshold_to_s(wide, hyper.s, hyper.common_support);
}

/// The full fitting pipeline: warm start, block CD, then local search for
/// the support-heterogeneous methods. Rounds of swaps alternate with CD
/// re-solves so the returned coefficients are stationary on the final
/// support; the swap budget is shared across rounds.
inline ModelFit final_fit(const MTLProblem& prob, const Hyperparameters& hyper,
                          const SolverConfig& config = {},
                          int local_search_iterations = 50) {
    const ModelFit seed = warm_start(prob, hyper, config);
    ModelFit fit = solve(prob, hyper, config, &seed);
    if (hyper.common_support || local_search_iterations <= 0) return fit;

    auto [cprob, centering] = center_problem(prob);
    std::vector<double> trace = fit.objective_trace;
    int sweeps = fit.sweeps;
    int swaps_total = 0;
    long long touched = fit.coords_touched;
    int budget = local_search_iterations;
    const int max_rounds = 10;
    for (int round = 0; round < max_rounds && budget > 0; ++round) {
        ModelFit centered = fit;
        centered.intercepts.setZero();
        centered.objective_trace.clear();
        ModelFit swapped = local_search(centered, cprob, hyper, budget);
        if (swapped.swaps_committed == 0) break;
        swaps_total += swapped.swaps_committed;
        budget -= swapped.swaps_committed;
        trace.insert(trace.end(), swapped.objective_trace.begin(),
                     swapped.objective_trace.end());
        recover_intercepts(swapped, centering);
        fit = solve(prob, hyper, config, &swapped);
        sweeps += fit.sweeps;
        touched += fit.coords_touched;
        trace.insert(trace.end(), fit.objective_trace.begin() + 1,
                     fit.objective_trace.end());
    }
    fit.objective_trace = std::move(trace);
    fit.sweeps = sweeps;
    fit.swaps_committed = swaps_total;
    fit.coords_touched = touched;
    return fit;
}

struct CVPoint {
    Hyperparameters hyper;
    double delta_star = 0.0;
    int stage = 0;
    double mean_error = std::numeric_limits<double>::quiet_NaN();
    double sd_error = 0.0;
    std::vector<std::vector<double>> fold_task_errors;  // [fold][task]
    double wall_seconds = 0.0;
};

struct CVReport {
    std::vector<CVPoint> points;
    int selected_index = -1;
    int n_folds = 0;
    std::uint64_t seed = 0;

    const CVPoint& selected() const { return points.at(selected_index); }
};

namespace detail {

/// Per-task row partition into n_folds blocks from a seeded shuffle.
inline std::vector<std::vector<std::vector<int>>> fold_partition(
    const MTLProblem& prob, int n_folds, std::uint64_t seed) {
    std::vector<std::vector<std::vector<int>>> blocks(prob.K());
    for (Eigen::Index k = 0; k < prob.K(); ++k) {
        const int n = int(prob.tasks[k].n());
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        auto rng = make_rng(derive_seed(seed, 7000 + std::uint64_t(k)));
        for (int i = n - 1; i > 0; --i) {
            std::uniform_int_distribution<int> dist(0, i);
            std::swap(idx[i], idx[dist(rng)]);
        }
        blocks[k].resize(n_folds);
        const int base = n / n_folds, rem = n % n_folds;
        int pos = 0;
        for (int f = 0; f < n_folds; ++f) {
            const int len = base + (f < rem ? 1 : 0);
            blocks[k][f].assign(idx.begin() + pos, idx.begin() + pos + len);
            std::sort(blocks[k][f].begin(), blocks[k][f].end());
            pos += len;
        }
    }
    return blocks;
}

inline TaskDataset gather_rows(const TaskDataset& t, const std::vector<int>& rows) {
    TaskDataset out;
    out.id = t.id;
    out.X.resize(rows.size(), t.p());
    out.y.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        out.X.row(i) = t.X.row(rows[i]);
        out.y[i] = t.y[rows[i]];
    }
    return out;
}

/// Warm-started path over the ordered points within one fold; writes the
/// per-task validation RMSE for every point.
inline void run_fold_path(const MTLProblem& train, const MTLProblem& val,
                          const std::vector<GridPoint>& points,
                          const SolverConfig& config,
                          std::vector<std::vector<double>>& errors_out,
                          std::vector<double>& seconds_out) {
    ModelFit prev;
    bool have_prev = false;
    for (size_t i = 0; i < points.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const Hyperparameters& hyper = points[i].hyper;
        ModelFit fit;
        if (!have_prev) {
            const ModelFit seed = warm_start(train, hyper, config);
            fit = solve(train, hyper, config, &seed);
        } else {
            const ModelFit seed =
                threshold_to_s(prev, hyper.s, hyper.common_support);
            fit = solve(train, hyper, config, &seed);
        }
        prev = fit;
        have_prev = true;
        for (Eigen::Index k = 0; k < val.K(); ++k) {
            const auto& vt = val.tasks[k];
            const VectorXd pred = predict(fit, vt.X, k);
            errors_out[i][size_t(k)] =
                (vt.y - pred).norm() / std::sqrt(double(vt.n()));
        }
        seconds_out[i] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
    }
}

inline bool cv_better(const CVPoint& a, const CVPoint& b) {
    if (a.mean_error != b.mean_error) return a.mean_error < b.mean_error;
    if (a.hyper.s != b.hyper.s) return a.hyper.s < b.hyper.s;
    if (a.hyper.delta != b.hyper.delta) return a.hyper.delta > b.hyper.delta;
    if (a.hyper.lambda != b.hyper.lambda) return a.hyper.lambda > b.hyper.lambda;
    if (a.hyper.alpha != b.hyper.alpha) return a.hyper.alpha > b.hyper.alpha;
    return false;
}

/// Cross-validates an explicit point list (already ordered). Points carry
/// delta on the delta* scale and are standardized here per point.
inline std::vector<CVPoint> tune_points(const MTLProblem& prob,
                                        std::vector<GridPoint> points,
                                        int n_folds, std::uint64_t seed,
                                        const SolverConfig& config,
                                        int n_threads) {
    validate_problem(prob);
    require(n_folds >= 2, ErrorKind::config, "need at least 2 folds");
    for (const auto& t : prob.tasks)
        require(t.n() >= n_folds, ErrorKind::config,
                "task '" + t.id + "' has " + std::to_string(t.n()) +
                    " rows, fewer than n_folds=" + std::to_string(n_folds));

    const int K = int(prob.K()), p = int(prob.p());
    for (auto& pt : points) {
        pt.hyper.delta = pt.hyper.common_support
                             ? 0.0
                             : standardize_delta(pt.delta_star, pt.hyper.s, K, p,
                                                 10000, seed)
                                   .delta;
        validate_hyper(pt.hyper, p);
    }

    const auto blocks = fold_partition(prob, n_folds, seed);
    std::vector<std::vector<std::vector<double>>> errors(
        points.size(),
        std::vector<std::vector<double>>(n_folds, std::vector<double>(K, 0.0)));
    std::vector<std::vector<double>> seconds(
        n_folds, std::vector<double>(points.size(), 0.0));

    parallel_for(n_folds, n_threads, [&](int f) {
        MTLProblem train, val;
        for (int k = 0; k < K; ++k) {
            std::vector<int> train_rows;
            for (int g = 0; g < n_folds; ++g)
                if (g != f)
                    train_rows.insert(train_rows.end(), blocks[k][g].begin(),
                                      blocks[k][g].end());
            std::sort(train_rows.begin(), train_rows.end());
            train.tasks.push_back(gather_rows(prob.tasks[k], train_rows));
            val.tasks.push_back(gather_rows(prob.tasks[k], blocks[k][f]));
        }
        std::vector<std::vector<double>> fold_errors(points.size(),
                                                     std::vector<double>(K, 0.0));
        run_fold_path(train, val, points, config, fold_errors, seconds[f]);
        for (size_t i = 0; i < points.size(); ++i)
            errors[i][f] = fold_errors[i];
    });

    std::vector<CVPoint> out(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        CVPoint& cp = out[i];
        cp.hyper = points[i].hyper;
        cp.delta_star = points[i].delta_star;
        cp.stage = points[i].stage;
        cp.fold_task_errors = errors[i];
        std::vector<double> fold_means(n_folds, 0.0);
        for (int f = 0; f < n_folds; ++f) {
            double m = 0.0;
            for (int k = 0; k < K; ++k) m += errors[i][f][k];
            fold_means[f] = m / double(K);
        }
        double mean = 0.0;
        for (double v : fold_means) mean += v;
        mean /= double(n_folds);
        double var = 0.0;
        for (double v : fold_means) var += (v - mean) * (v - mean);
        cp.mean_error = mean;
        cp.sd_error = n_folds > 1 ? std::sqrt(var / double(n_folds - 1)) : 0.0;
        for (int f = 0; f < n_folds; ++f) cp.wall_seconds += seconds[f][i];
    }
    return out;
}

inline int select_point(const std::vector<CVPoint>& points, int stage_filter) {
    int best = -1;
    for (size_t i = 0; i < points.size(); ++i) {
        if (stage_filter >= 0 && points[i].stage != stage_filter) continue;
        if (best < 0 || cv_better(points[i], points[best])) best = int(i);
    }
    return best;
}

/// Grid-position neighbors (one step either side, boundary-clamped).
template <class T>
inline std::vector<T> grid_neighbors(const std::vector<T>& values, const T& center) {
    int pos = 0;
    for (size_t i = 0; i < values.size(); ++i)
        if (values[i] == center) pos = int(i);
    std::vector<T> out;
    for (int d = -1; d <= 1; ++d) {
        const int i = std::clamp(pos + d, 0, int(values.size()) - 1);
        if (out.empty() || out.back() != values[i]) out.push_back(values[i]);
    }
    return out;
}

}  // namespace detail

/// 10-fold-style cross-validation over the ordered grid with path warm
/// starts. Local search stays off during tuning; run final_fit at the
/// selected point afterwards.
inline CVReport tune_cv(const MTLProblem& prob, const TuningGrid& grid,
                        int n_folds = 10, std::uint64_t seed = 0,
                        const SolverConfig& config = {}, int n_threads = 1) {
    validate_grid(grid, prob.p());
    CVReport report;
    report.n_folds = n_folds;
    report.seed = seed;
    report.points =
        detail::tune_points(prob, order_grid(grid), n_folds, seed, config, n_threads);
    report.selected_index = detail::select_point(report.points, -1);
    return report;
}

/// Two-stage tuning for the three-parameter methods: (s, delta*) against a
/// small pilot ridge first, then a 3 x 3 x full-third-grid refinement around
/// the stage-1 winner.
inline CVReport two_stage_tune(const MTLProblem& prob, const TuningGrid& grid,
                               double pilot_alpha = 1e-3, int n_folds = 10,
                               std::uint64_t seed = 0,
                               const SolverConfig& config = {}, int n_threads = 1) {
    validate_grid(grid, prob.p());
    const MethodMask mask = method_mask(grid.method);
    require(mask.n_tunable() == 3 && mask.delta_tunable, ErrorKind::config,
            "two-stage tuning applies to methods with three tunable "
            "parameters (s, delta and one shrinkage penalty)");
    const bool third_is_lambda = mask.lambda_tunable;
    const std::vector<double>& third =
        third_is_lambda ? grid.lambda_values : grid.alpha_values;
    if (third.size() <= 1) return tune_cv(prob, grid, n_folds, seed, config, n_threads);

    TuningGrid stage1 = grid;
    stage1.lambda_values = {0.0};
    stage1.alpha_values = {0.0};
    std::vector<GridPoint> pts1 = order_grid(stage1);
    for (auto& pt : pts1) {
        pt.hyper.alpha = pilot_alpha;  // small fixed ridge in the first pass
        pt.stage = 1;
    }
    CVReport report;
    report.n_folds = n_folds;
    report.seed = seed;
    report.points =
        detail::tune_points(prob, pts1, n_folds, seed, config, n_threads);
    const int best1 = detail::select_point(report.points, 1);
    const int s_star = report.points[best1].hyper.s;
    const double d_star = report.points[best1].delta_star;

    TuningGrid stage2 = grid;
    stage2.s_values = detail::grid_neighbors(grid.s_values, s_star);
    stage2.delta_star_values =
        detail::grid_neighbors(grid.delta_star_values, d_star);
    std::vector<GridPoint> pts2 = order_grid(stage2);
    for (auto& pt : pts2) pt.stage = 2;
    const std::vector<CVPoint> cv2 =
        detail::tune_points(prob, pts2, n_folds, seed, config, n_threads);
    report.points.insert(report.points.end(), cv2.begin(), cv2.end());
    report.selected_index = detail::select_point(report.points, 2);
    return report;
}

/// One row per grid point: stage, hyperparameters (both delta scales), mean
/// CV error and its sd over folds.
inline void write_cv_report(const CVReport& report, std::ostream& os) {
    os << "stage,s,lambda,alpha,delta_star,delta,mean_cv_error,sd_cv_error,selected\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (size_t i = 0; i < report.points.size(); ++i) {
        const CVPoint& pt = report.points[i];
        os << pt.stage << "," << pt.hyper.s << "," << num(pt.hyper.lambda) << ","
           << num(pt.hyper.alpha) << "," << num(pt.delta_star) << ","
           << num(pt.hyper.delta) << "," << num(pt.mean_error) << ","
           << num(pt.sd_error) << "," << (int(i) == report.selected_index ? 1 : 0)
           << "\n";
    }
}

}  // namespace smtl
