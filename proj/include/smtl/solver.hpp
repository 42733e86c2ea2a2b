#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "smtl/objective.hpp"
#include "smtl/types.hpp"

namespace smtl {

struct SolverConfig {
    int max_sweeps = 1000;
    double rel_tol = 1e-8;            // on relative objective decrease
    int lipschitz_power_iters = 500;
    double lipschitz_tol = 1e-6;
    bool use_active_sets = true;
    int active_screen_multiplier = 2;
    bool check_majorization = false;  // per-update surrogate validity assert
};

inline void validate_config(const SolverConfig& c) {
    require(c.max_sweeps >= 1 && c.lipschitz_power_iters >= 1 &&
                c.active_screen_multiplier >= 1,
            ErrorKind::config, "solver iteration counts must be positive");
    require(c.rel_tol > 0.0 && c.rel_tol < 1.0, ErrorKind::config,
            "rel_tol must be in (0, 1)");
    require(c.lipschitz_tol > 0.0, ErrorKind::config,
            "lipschitz_tol must be positive");
}

/// Largest eigenvalue of X^T X by power iteration from the all-ones vector.
inline double spectral_norm_gram(const MatrixXd& X, int max_iters, double tol) {
    const Eigen::Index p = X.cols();
    VectorXd v = VectorXd::Constant(p, 1.0 / std::sqrt(double(p)));
    double theta = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        VectorXd w = X.transpose() * (X * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        const double theta_new = v.dot(X.transpose() * (X * v));
        if (std::abs(theta_new - theta) <= tol * std::abs(theta_new)) {
            theta = theta_new;
            break;
        }
        theta = theta_new;
    }
    return theta;
}

/// Step size bound for the per-task gradient: (2/n) sigma_max(X^T X) + 2 lambda
/// + 2 alpha. The spectral estimate is inflated by 1% to stay a majorizer
/// despite power-iteration error.
inline double lipschitz_constant(const TaskDataset& task, double lambda,
                                 double alpha, int max_iters = 500,
                                 double tol = 1e-6) {
    validate_task(task);
    const double sigma = spectral_norm_gram(task.X, max_iters, tol);
    return (2.0 / double(task.n())) * 1.01 * sigma + 2.0 * lambda + 2.0 * alpha;
}

/// Gradient of g_k(beta, beta_bar) = (1/n)||y - X beta||^2
/// + lambda ||beta - beta_bar||^2 + alpha ||beta||^2.
inline VectorXd gradient_g(const VectorXd& beta, const VectorXd& beta_bar,
                           const TaskDataset& task, double lambda, double alpha) {
    require(beta.size() == task.p() && beta_bar.size() == task.p(),
            ErrorKind::dimension_mismatch, "gradient_g: length mismatch");
    VectorXd g = (2.0 / double(task.n())) *
                 (task.X.transpose() * (task.X * beta - task.y));
    if (lambda != 0.0) g += 2.0 * lambda * (beta - beta_bar);
    if (alpha != 0.0) g += 2.0 * alpha * beta;
    return g;
}

namespace detail {

/// Keep-vs-drop scores and hard-threshold selection of the proximal update.
/// Returns the chosen coordinates; b holds the unconstrained gradient step.
inline std::vector<int> select_support(const VectorXd& b, const VectorXd& z_bar,
                                       double delta, double L, int s) {
    const Eigen::Index p = b.size();
    std::vector<int> cand;
    cand.reserve(p);
    VectorXd score(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double zb = z_bar[j];
        const double dj =
            delta * (1.0 - zb) * (1.0 - zb) - (0.5 * L * b[j] * b[j] + delta * zb * zb);
        score[j] = dj;
        if (dj < 0.0) cand.push_back(int(j));
    }
    std::sort(cand.begin(), cand.end(), [&](int a, int c) {
        if (score[a] != score[c]) return score[a] < score[c];
        const double ba = std::abs(b[a]), bc = std::abs(b[c]);
        if (ba != bc) return ba > bc;
        return a < c;
    });
    if (int(cand.size()) > s) cand.resize(s);
    std::sort(cand.begin(), cand.end());
    return cand;
}

struct SweepState {
    Hyperparameters hyper;
    MatrixXd B;
    MatrixXi Z;
    VectorXd beta_bar, z_bar;
    std::vector<VectorXd> resid;   // y_k - X_k B.col(k)
    std::vector<double> L;
    long long coords_touched = 0;
};

inline SweepState make_state(const MTLProblem& prob, const Hyperparameters& hyper,
                             const ModelFit* init, const SolverConfig& config) {
    SweepState st;
    st.hyper = hyper;
    const Eigen::Index p = prob.p(), K = prob.K();
    if (init) {
        st.B = init->B;
        st.Z = init->Z;
    } else {
        st.B = MatrixXd::Zero(p, K);
        st.Z = MatrixXi::Zero(p, K);
    }
    st.beta_bar = st.B.rowwise().mean();
    st.z_bar = st.Z.cast<double>().rowwise().mean();
    st.resid.resize(K);
    st.L.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        st.resid[k] = prob.tasks[k].y - prob.tasks[k].X * st.B.col(k);
        st.L[k] = lipschitz_constant(prob.tasks[k], hyper.lambda, hyper.alpha,
                                     config.lipschitz_power_iters,
                                     config.lipschitz_tol);
        if (st.L[k] <= 0.0) st.L[k] = 1.0;  // all-zero X with no penalties
    }
    return st;
}

/// Objective of the current state; averages recomputed, intercepts are zero
/// by construction (data is centered before the solver runs).
inline double state_objective(const MTLProblem& prob, const SweepState& st) {
    const Eigen::Index K = prob.K();
    double data = 0.0, bbar = 0.0, ridge = 0.0, zbar = 0.0;
    const VectorXd bmean = st.B.rowwise().mean();
    for (Eigen::Index k = 0; k < K; ++k) {
        data += st.resid[k].squaredNorm() / double(prob.tasks[k].n());
        if (st.hyper.lambda > 0.0)
            bbar += st.hyper.lambda * (st.B.col(k) - bmean).squaredNorm();
        if (st.hyper.alpha > 0.0)
            ridge += st.hyper.alpha * st.B.col(k).squaredNorm();
    }
    if (!st.hyper.common_support && st.hyper.delta > 0.0) {
        const double Kd = double(K);
        for (Eigen::Index j = 0; j < st.Z.rows(); ++j) {
            const double c = double(st.Z.row(j).sum());
            zbar += st.hyper.delta * (c - c * c / Kd);
        }
    }
    return data + bbar + ridge + zbar;
}

inline double g_value(const MTLProblem& prob, const SweepState& st,
                      Eigen::Index k, const VectorXd& beta,
                      const VectorXd& beta_bar) {
    const auto& task = prob.tasks[k];
    double v = (task.y - task.X * beta).squaredNorm() / double(task.n());
    if (st.hyper.lambda > 0.0)
        v += st.hyper.lambda * (beta - beta_bar).squaredNorm();
    if (st.hyper.alpha > 0.0) v += st.hyper.alpha * beta.squaredNorm();
    return v;
}

/// One proximal hard-thresholding update of task k with beta_bar and z_bar
/// frozen at their values from the end of the previous sweep.
inline void update_task(const MTLProblem& prob, SweepState& st, Eigen::Index k,
                        const VectorXd& beta_bar_frozen,
                        const VectorXd& z_bar_frozen, const SolverConfig& config) {
    const auto& task = prob.tasks[k];
    const Eigen::Index p = task.p();
    const double L = st.L[k];
    const VectorXd beta_prev = st.B.col(k);

    VectorXd grad = (-2.0 / double(task.n())) * (task.X.transpose() * st.resid[k]);
    if (st.hyper.lambda != 0.0) grad += 2.0 * st.hyper.lambda * (beta_prev - beta_bar_frozen);
    if (st.hyper.alpha != 0.0) grad += 2.0 * st.hyper.alpha * beta_prev;

    const VectorXd b = beta_prev - grad / L;
    const std::vector<int> keep =
        select_support(b, z_bar_frozen, st.hyper.delta, L, st.hyper.s);

    VectorXd beta_new = VectorXd::Zero(p);
    st.Z.col(k).setZero();
    for (int j : keep) {
        beta_new[j] = b[j];
        st.Z(j, k) = 1;
    }
    if (config.check_majorization) {
        const double lhs = g_value(prob, st, k, beta_new, beta_bar_frozen);
        const double rhs = g_value(prob, st, k, beta_prev, beta_bar_frozen) +
                           grad.dot(beta_new - beta_prev) +
                           0.5 * L * (beta_new - beta_prev).squaredNorm();
        require(lhs <= rhs + 1e-9 * (1.0 + std::abs(rhs)), ErrorKind::divergence,
                "majorization violated for task " + std::to_string(k));
    }
    st.B.col(k) = beta_new;
    st.resid[k] = task.y;
    for (int j : keep) st.resid[k] -= beta_new[j] * task.X.col(j);
    st.coords_touched += p;
}

/// One full sweep: all task updates against frozen averages, then the z_bar
/// and beta_bar refresh.
inline void sweep_heterogeneous(const MTLProblem& prob, SweepState& st,
                                const SolverConfig& config) {
    const VectorXd beta_bar_frozen = st.beta_bar;
    const VectorXd z_bar_frozen = st.z_bar;
    for (Eigen::Index k = 0; k < prob.K(); ++k)
        update_task(prob, st, k, beta_bar_frozen, z_bar_frozen, config);
    st.z_bar = st.Z.cast<double>().rowwise().mean();
    st.beta_bar = st.B.rowwise().mean();
}

/// Joint hard threshold for the common-support problem: gradient steps for
/// every task, then the shared support maximizing sum_k (L_k/2) b_{k,j}^2.
inline void sweep_common(const MTLProblem& prob, SweepState& st,
                         const SolverConfig& config) {
    const Eigen::Index p = prob.p(), K = prob.K();
    const VectorXd beta_bar_frozen = st.beta_bar;
    MatrixXd Bstep(p, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& task = prob.tasks[k];
        VectorXd grad =
            (-2.0 / double(task.n())) * (task.X.transpose() * st.resid[k]);
        if (st.hyper.lambda != 0.0)
            grad += 2.0 * st.hyper.lambda * (st.B.col(k) - beta_bar_frozen);
        if (st.hyper.alpha != 0.0) grad += 2.0 * st.hyper.alpha * st.B.col(k);
        Bstep.col(k) = st.B.col(k) - grad / st.L[k];
        st.coords_touched += p;
    }
    VectorXd score = VectorXd::Zero(p);
    for (Eigen::Index k = 0; k < K; ++k)
        score += 0.5 * st.L[k] * Bstep.col(k).array().square().matrix();
    std::vector<int> cand;
    for (Eigen::Index j = 0; j < p; ++j)
        if (score[j] > 0.0) cand.push_back(int(j));
    std::sort(cand.begin(), cand.end(), [&](int a, int c) {
        if (score[a] != score[c]) return score[a] > score[c];
        return a < c;
    });
    if (int(cand.size()) > st.hyper.s) cand.resize(st.hyper.s);
    std::sort(cand.begin(), cand.end());

    const MatrixXd b_prev = st.B;
    st.B.setZero();
    st.Z.setZero();
    for (int j : cand) {
        for (Eigen::Index k = 0; k < K; ++k) {
            st.B(j, k) = Bstep(j, k);
            st.Z(j, k) = 1;
        }
    }
    if (config.check_majorization)
        for (Eigen::Index k = 0; k < K; ++k) {
            const VectorXd grad = st.L[k] * (b_prev.col(k) - Bstep.col(k));
            const double lhs = g_value(prob, st, k, st.B.col(k), beta_bar_frozen);
            const double rhs = g_value(prob, st, k, b_prev.col(k), beta_bar_frozen) +
                               grad.dot(st.B.col(k) - b_prev.col(k)) +
                               0.5 * st.L[k] * (st.B.col(k) - b_prev.col(k)).squaredNorm();
            require(lhs <= rhs + 1e-9 * (1.0 + std::abs(rhs)), ErrorKind::divergence,
                    "majorization violated for task " + std::to_string(k));
        }
    for (Eigen::Index k = 0; k < K; ++k) {
        st.resid[k] = prob.tasks[k].y;
        for (int j : cand) st.resid[k] -= st.B(j, k) * prob.tasks[k].X.col(j);
    }
    st.z_bar = st.Z.cast<double>().rowwise().mean();
    st.beta_bar = st.B.rowwise().mean();
}

/// Sweeps until the relative objective decrease drops below rel_tol or the
/// sweep budget runs out. Appends to trace; trace[0] must already hold the
/// objective of the initial state.
inline int run_sweeps(const MTLProblem& prob, SweepState& st,
                      const SolverConfig& config, std::vector<double>& trace,
                      int max_sweeps) {
    int sweeps = 0;
    double prev = trace.back();
    while (sweeps < max_sweeps) {
        if (st.hyper.common_support)
            sweep_common(prob, st, config);
        else
            sweep_heterogeneous(prob, st, config);
        ++sweeps;
        const double cur = state_objective(prob, st);
        require(std::isfinite(cur), ErrorKind::divergence,
                "objective became non-finite during block CD");
        trace.push_back(cur);
        if (prev - cur < config.rel_tol * std::max(1.0, std::abs(prev))) break;
        prev = cur;
    }
    return sweeps;
}

}  // namespace detail

/// Per-task centering statistics; the intercept of task k is recovered as
/// y_mean_k - x_means.row(k) . beta_k.
struct Centering {
    MatrixXd x_means;  // K x p
    VectorXd y_means;  // K
};

inline std::pair<MTLProblem, Centering> center_problem(const MTLProblem& prob) {
    MTLProblem out;
    Centering c;
    const Eigen::Index K = prob.K(), p = prob.p();
    c.x_means.resize(K, p);
    c.y_means.resize(K);
    out.tasks.reserve(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& t = prob.tasks[k];
        TaskDataset ct;
        ct.id = t.id;
        c.x_means.row(k) = t.X.colwise().mean();
        c.y_means[k] = t.y.mean();
        ct.X = t.X.rowwise() - c.x_means.row(k);
        ct.y = t.y.array() - c.y_means[k];
        out.tasks.push_back(std::move(ct));
    }
    return {std::move(out), std::move(c)};
}

inline void recover_intercepts(ModelFit& fit, const Centering& c) {
    const Eigen::Index K = fit.K();
    fit.intercepts.resize(K);
    for (Eigen::Index k = 0; k < K; ++k)
        fit.intercepts[k] = c.y_means[k] - c.x_means.row(k).dot(fit.B.col(k));
}

/// Single proximal hard-thresholding update of one task, exposed for tests.
/// beta_bar and z_bar are the frozen averages from the previous sweep.
inline std::pair<VectorXd, VectorXi> task_update(
    const VectorXd& beta_prev, const VectorXd& beta_bar, const VectorXd& z_bar,
    const TaskDataset& task, const Hyperparameters& hyper, double L) {
    const Eigen::Index p = task.p();
    const VectorXd grad = gradient_g(beta_prev, beta_bar, task, hyper.lambda, hyper.alpha);
    const VectorXd b = beta_prev - grad / L;
    const std::vector<int> keep =
        detail::select_support(b, z_bar, hyper.delta, L, hyper.s);
    VectorXd beta = VectorXd::Zero(p);
    VectorXi z = VectorXi::Zero(p);
    for (int j : keep) {
        beta[j] = b[j];
        z[j] = 1;
    }
    return {beta, z};
}

namespace detail {

inline ModelFit finalize(const Centering& centering, SweepState&& st,
                         std::vector<double>&& trace, int sweeps) {
    ModelFit fit;
    fit.B = std::move(st.B);
    fit.Z = std::move(st.Z);
    fit.refresh_averages();
    recover_intercepts(fit, centering);
    fit.objective_trace = std::move(trace);
    fit.sweeps = sweeps;
    fit.coords_touched = st.coords_touched;
    return fit;
}

inline ModelFit fit_plain(const MTLProblem& prob, const Hyperparameters& hyper,
                          const SolverConfig& config, const ModelFit* init) {
    validate_problem(prob);
    validate_hyper(hyper, prob.p());
    validate_config(config);
    if (init) validate_fit(*init, prob.p(), prob.K(), hyper);

    auto [cprob, centering] = center_problem(prob);
    SweepState st = make_state(cprob, hyper, init, config);
    std::vector<double> trace{state_objective(cprob, st)};
    const int sweeps = run_sweeps(cprob, st, config, trace, config.max_sweeps);
    return finalize(centering, std::move(st), std::move(trace), sweeps);
}

}  // namespace detail

/// Block coordinate descent for the support-heterogeneous problem.
/// Starts from zeros unless an init fit is given.
inline ModelFit fit(const MTLProblem& prob, const Hyperparameters& hyper,
                    const SolverConfig& config = {}, const ModelFit* init = nullptr) {
    require(!hyper.common_support, ErrorKind::config,
            "fit() handles the support-heterogeneous problem; use "
            "fit_common_support() for the common-support variant");
    return detail::fit_plain(prob, hyper, config, init);
}

/// Block coordinate descent constrained to one shared support vector.
inline ModelFit fit_common_support(const MTLProblem& prob,
                                   const Hyperparameters& hyper,
                                   const SolverConfig& config = {},
                                   const ModelFit* init = nullptr) {
    require(hyper.common_support, ErrorKind::config,
            "fit_common_support() requires hyper.common_support = true");
    return detail::fit_plain(prob, hyper, config, init);
}

/// Active-set accelerated fit: solve restricted to a screened coordinate set,
/// verify with one full-dimension sweep, augment and repeat until stable.
inline ModelFit fit_active_set(const MTLProblem& prob, const Hyperparameters& hyper,
                               const SolverConfig& config = {},
                               const ModelFit* init = nullptr) {
    require(!hyper.common_support, ErrorKind::config,
            "fit_active_set() handles the support-heterogeneous problem");
    validate_problem(prob);
    validate_hyper(hyper, prob.p());
    validate_config(config);
    if (init) validate_fit(*init, prob.p(), prob.K(), hyper);

    const Eigen::Index p = prob.p(), K = prob.K();
    const int screen = config.active_screen_multiplier * hyper.s;

    auto [cprob, centering] = center_problem(prob);
    std::vector<char> in_active(p, 0);
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& t = cprob.tasks[k];
        const VectorXd corr = (t.X.transpose() * t.y).cwiseAbs() / double(t.n());
        std::vector<int> order(p);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (corr[a] != corr[b]) return corr[a] > corr[b];
            return a < b;
        });
        for (int i = 0; i < std::min<int>(screen, int(p)); ++i)
            in_active[order[i]] = 1;
    }
    if (init)
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index k = 0; k < K; ++k)
                if (init->Z(j, k)) in_active[j] = 1;
    detail::SweepState st = detail::make_state(cprob, hyper, init, config);
    std::vector<double> trace{detail::state_objective(cprob, st)};
    int total_sweeps = 0;

    const int max_rounds = 50;
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<int> active;
        for (Eigen::Index j = 0; j < p; ++j)
            if (in_active[j]) active.push_back(int(j));

        if (int(active.size()) == int(p)) {
            total_sweeps += detail::run_sweeps(cprob, st, config, trace,
                                               config.max_sweeps - total_sweeps);
            break;
        }

        // Restricted subproblem on the active columns.
        MTLProblem sub;
        sub.tasks.reserve(K);
        for (Eigen::Index k = 0; k < K; ++k) {
            TaskDataset t;
            t.id = cprob.tasks[k].id;
            t.y = cprob.tasks[k].y;
            t.X.resize(cprob.tasks[k].n(), active.size());
            for (size_t a = 0; a < active.size(); ++a)
                t.X.col(a) = cprob.tasks[k].X.col(active[a]);
            sub.tasks.push_back(std::move(t));
        }
        ModelFit sub_init = zero_fit(Eigen::Index(active.size()), K);
        for (size_t a = 0; a < active.size(); ++a) {
            sub_init.B.row(a) = st.B.row(active[a]);
            sub_init.Z.row(a) = st.Z.row(active[a]);
        }
        detail::SweepState sub_st = detail::make_state(sub, hyper, &sub_init, config);
        sub_st.coords_touched = st.coords_touched;
        total_sweeps += detail::run_sweeps(sub, sub_st, config, trace,
                                           std::max(1, config.max_sweeps - total_sweeps));

        st.B.setZero();
        st.Z.setZero();
        for (size_t a = 0; a < active.size(); ++a) {
            st.B.row(active[a]) = sub_st.B.row(a);
            st.Z.row(active[a]) = sub_st.Z.row(a);
        }
        st.coords_touched = sub_st.coords_touched;
        st.beta_bar = st.B.rowwise().mean();
        st.z_bar = st.Z.cast<double>().rowwise().mean();
        for (Eigen::Index k = 0; k < K; ++k) {
            st.resid[k] = cprob.tasks[k].y - cprob.tasks[k].X * st.B.col(k);
        }

        // One full-dimension verification sweep.
        const MatrixXi z_before = st.Z;
        const double obj_before = detail::state_objective(cprob, st);
        detail::sweep_heterogeneous(cprob, st, config);
        ++total_sweeps;
        const double obj_after = detail::state_objective(cprob, st);
        require(std::isfinite(obj_after), ErrorKind::divergence,
                "objective became non-finite during active-set fit");
        trace.push_back(obj_after);
        const bool stable =
            (st.Z == z_before) &&
            (obj_before - obj_after <
             config.rel_tol * std::max(1.0, std::abs(obj_before)));
        if (stable) break;
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index k = 0; k < K; ++k)
                if (st.B(j, k) != 0.0) in_active[j] = 1;
    }
    return detail::finalize(centering, std::move(st), std::move(trace),
                            total_sweeps);
}

/// Dispatch on the method family: common-support variant, active-set
/// acceleration, or plain sweeps.
inline ModelFit solve(const MTLProblem& prob, const Hyperparameters& hyper,
                      const SolverConfig& config = {},
                      const ModelFit* init = nullptr) {
    if (hyper.common_support) return fit_common_support(prob, hyper, config, init);
    if (config.use_active_sets) return fit_active_set(prob, hyper, config, init);
    return fit(prob, hyper, config, init);
}

}  // namespace smtl
