#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "smtl/objective.hpp"
#include "smtl/types.hpp"

namespace smtl {

/// One candidate exchange for task `task`: j_out leaves the support, j_in
/// enters with coefficient b_opt. Deltas are exact objective changes.
struct SwapEvaluation {
    Eigen::Index task = 0;
    int j_in = -1;
    int j_out = -1;
    double b_opt = 0.0;
    double delta_g = 0.0;
    double delta_h = 0.0;
    double delta_total = 0.0;
};

constexpr double kSwapImprovementTol = 1e-12;

namespace detail {

/// Objective change of swapping j1 -> j2 in task k0, as a closed form in the
/// entering coefficient b. The three quadratic coefficients are assembled
/// from cached residuals and the row-wise penalty algebra; intercepts stay
/// fixed. q2*b^2 + q1*b + q0 is the total change excluding the support terms.
struct SwapQuadratic {
    double q2 = 0.0, q1 = 0.0, q0 = 0.0;
    double dh = 0.0;  // support-penalty change, constant in b

    double b_opt() const { return q2 > 0.0 ? -q1 / (2.0 * q2) : 0.0; }
    double delta_g_at(double b) const { return q0 + b * (q1 + b * q2); }
};

inline SwapQuadratic swap_quadratic(
    const TaskDataset& task, const Hyperparameters& hyper, Eigen::Index K,
    double beta1, double r_dot_x1, double x1_dot_x2, double r_dot_x2,
    double coln2_j1, double coln2_j2, double rowsum_j1, double rowsum_j2,
    int count_j1, int count_j2) {
    const double n = double(task.n());
    const double Kd = double(K);
    SwapQuadratic q;
    q.q2 = coln2_j2 / n + hyper.alpha + hyper.lambda * (Kd - 1.0) / Kd;
    // u = r + beta1 * x_j1 is the residual with j1 dropped.
    const double u_dot_x2 = r_dot_x2 + beta1 * x1_dot_x2;
    q.q1 = -2.0 / n * u_dot_x2 - 2.0 * hyper.lambda / Kd * rowsum_j2;
    q.q0 = (2.0 * beta1 * r_dot_x1 + beta1 * beta1 * coln2_j1) / n -
           hyper.alpha * beta1 * beta1 +
           hyper.lambda * (-beta1 * beta1 * (1.0 + 1.0 / Kd) +
                           2.0 * rowsum_j1 * beta1 / Kd);
    if (!hyper.common_support && hyper.delta > 0.0) {
        const double c1 = double(count_j1), c2 = double(count_j2);
        q.dh = hyper.delta * (-1.0 + (2.0 * c1 - 1.0) / Kd) +
               hyper.delta * (1.0 - (2.0 * c2 + 1.0) / Kd);
    }
    return q;
}

/// Shared caches for scanning swaps across repeated calls.
struct LsState {
    MatrixXd B;
    MatrixXi Z;
    std::vector<VectorXd> resid;    // y_k - X_k b_k - b0_k
    std::vector<VectorXd> coln2;    // per task, ||x_j||^2
    VectorXd rowsum;                // sum_k B(j,k)
    VectorXi rowcount;              // sum_k Z(j,k)
};

inline LsState make_ls_state(const MTLProblem& prob, const ModelFit& fit) {
    LsState st;
    st.B = fit.B;
    st.Z = fit.Z;
    const Eigen::Index K = prob.K();
    st.resid.resize(K);
    st.coln2.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& t = prob.tasks[k];
        st.resid[k] = t.y - t.X * st.B.col(k) -
                      VectorXd::Constant(t.n(), fit.intercepts[k]);
        st.coln2[k] = t.X.colwise().squaredNorm();
    }
    st.rowsum = st.B.rowwise().sum();
    st.rowcount = st.Z.rowwise().sum();
    return st;
}

inline std::optional<SwapEvaluation> best_swap_state(const MTLProblem& prob,
                                                     const Hyperparameters& hyper,
                                                     const LsState& st,
                                                     Eigen::Index k0) {
    const auto& task = prob.tasks[k0];
    const Eigen::Index p = prob.p(), K = prob.K();
    std::vector<int> support;
    for (Eigen::Index j = 0; j < p; ++j)
        if (st.Z(j, k0)) support.push_back(int(j));
    if (support.empty()) return std::nullopt;

    const VectorXd w = task.X.transpose() * st.resid[k0];  // r . x_j for all j
    std::optional<SwapEvaluation> best;
    for (int j1 : support) {
        const double beta1 = st.B(j1, k0);
        const VectorXd g1 = task.X.transpose() * task.X.col(j1);
        for (int j2 = 0; j2 < int(p); ++j2) {
            if (st.Z(j2, k0)) continue;
            const SwapQuadratic q = swap_quadratic(
                task, hyper, K, beta1, w[j1], g1[j2], w[j2], st.coln2[k0][j1],
                st.coln2[k0][j2], st.rowsum[j1], st.rowsum[j2],
                st.rowcount[j1], st.rowcount[j2]);
            const double b = q.b_opt();
            const double dg = q.delta_g_at(b);
            const double total = dg + q.dh;
            if (total < -kSwapImprovementTol &&
                (!best || total < best->delta_total)) {
                best = SwapEvaluation{k0, j2, j1, b, dg, q.dh, total};
            }
        }
    }
    return best;
}

}  // namespace detail

/// Exact objective change for one specified swap; intercepts are held fixed.
inline SwapEvaluation evaluate_swap(const ModelFit& fit, const MTLProblem& prob,
                                    const Hyperparameters& hyper,
                                    Eigen::Index k0, int j_out, int j_in) {
    require(k0 >= 0 && k0 < prob.K(), ErrorKind::dimension_mismatch,
            "task index out of range");
    require(j_out >= 0 && j_out < prob.p() && j_in >= 0 && j_in < prob.p(),
            ErrorKind::dimension_mismatch, "swap coordinate out of range");
    require(fit.Z(j_out, k0) == 1, ErrorKind::infeasible,
            "j_out is not in the support of the task");
    require(fit.Z(j_in, k0) == 0, ErrorKind::infeasible,
            "j_in is already in the support of the task");
    const auto& task = prob.tasks[k0];
    const VectorXd resid = task.y - task.X * fit.B.col(k0) -
                           VectorXd::Constant(task.n(), fit.intercepts[k0]);
    const double beta1 = fit.B(j_out, k0);
    const auto x1 = task.X.col(j_out);
    const auto x2 = task.X.col(j_in);
    const detail::SwapQuadratic q = detail::swap_quadratic(
        task, hyper, prob.K(), beta1, resid.dot(x1), x1.dot(x2), resid.dot(x2),
        x1.squaredNorm(), x2.squaredNorm(), fit.B.row(j_out).sum(),
        fit.B.row(j_in).sum(), fit.Z.row(j_out).sum(), fit.Z.row(j_in).sum());
    SwapEvaluation ev;
    ev.task = k0;
    ev.j_out = j_out;
    ev.j_in = j_in;
    ev.b_opt = q.b_opt();
    ev.delta_g = q.delta_g_at(ev.b_opt);
    ev.delta_h = q.dh;
    ev.delta_total = ev.delta_g + ev.delta_h;
    return ev;
}

/// Best single-coordinate exchange for task k0, or nothing if no swap
/// improves the objective by more than the commit tolerance. Ties break
/// toward the smallest (j_out, j_in) pair.
inline std::optional<SwapEvaluation> best_swap(const ModelFit& fit,
                                               const MTLProblem& prob,
                                               const Hyperparameters& hyper,
                                               Eigen::Index k0) {
    validate_problem(prob);
    validate_fit(fit, prob.p(), prob.K(), hyper);
    require(!hyper.common_support, ErrorKind::config,
            "per-task swaps are defined for the support-heterogeneous problem");
    const detail::LsState st = detail::make_ls_state(prob, fit);
    return detail::best_swap_state(prob, hyper, st, k0);
}

/// Cycles over tasks committing best swaps until a full cycle finds none or
/// max_iterations commits happen (one iteration = one committed swap).
/// Intercepts are not refit; the data is expected to be centered upstream.
inline ModelFit local_search(const ModelFit& fit, const MTLProblem& prob,
                             const Hyperparameters& hyper,
                             int max_iterations = 50) {
    validate_problem(prob);
    validate_hyper(hyper, prob.p());
    validate_fit(fit, prob.p(), prob.K(), hyper);
    require(!hyper.common_support, ErrorKind::config,
            "per-task swaps are defined for the support-heterogeneous problem");
    require(max_iterations >= 0, ErrorKind::config,
            "max_iterations must be >= 0");

    ModelFit out = fit;
    if (max_iterations == 0) return out;

    detail::LsState st = detail::make_ls_state(prob, out);
    double running = objective(prob, out, hyper);
    const Eigen::Index K = prob.K();
    int commits = 0;
    bool improved_in_cycle = true;
    while (improved_in_cycle && commits < max_iterations) {
        improved_in_cycle = false;
        for (Eigen::Index k = 0; k < K && commits < max_iterations; ++k) {
            const auto ev = detail::best_swap_state(prob, hyper, st, k);
            if (!ev) continue;
            const auto& task = prob.tasks[k];
            const double beta1 = st.B(ev->j_out, k);
            st.resid[k] += beta1 * task.X.col(ev->j_out) -
                           ev->b_opt * task.X.col(ev->j_in);
            st.B(ev->j_out, k) = 0.0;
            st.Z(ev->j_out, k) = 0;
            st.B(ev->j_in, k) = ev->b_opt;
            st.Z(ev->j_in, k) = 1;
            st.rowsum[ev->j_out] -= beta1;
            st.rowsum[ev->j_in] += ev->b_opt;
            st.rowcount[ev->j_out] -= 1;
            st.rowcount[ev->j_in] += 1;
            ++commits;
            improved_in_cycle = true;
            running += ev->delta_total;
            out.objective_trace.push_back(running);
            // Bound incremental-residual drift.
            if (commits % 25 == 0)
                for (Eigen::Index l = 0; l < K; ++l)
                    st.resid[l] = prob.tasks[l].y - prob.tasks[l].X * st.B.col(l) -
                                  VectorXd::Constant(prob.tasks[l].n(),
                                                     out.intercepts[l]);
        }
    }
    out.B = std::move(st.B);
    out.Z = std::move(st.Z);
    out.refresh_averages();
    out.swaps_committed = commits;
    return out;
}

}  // namespace smtl
