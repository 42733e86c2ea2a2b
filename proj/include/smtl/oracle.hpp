#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "smtl/objective.hpp"
#include "smtl/solver.hpp"
#include "smtl/types.hpp"

namespace smtl {

struct RestrictedSolution {
    MatrixXd B;         // p x K, zeros off-support
    double objective = 0.0;
    bool jittered = false;
};

namespace detail {

/// Joint normal-equation solve over the active coordinates of all tasks with
/// beta_bar substituted by the mean. Data is used as given (no centering, no
/// intercept). supports[k] holds the sorted active indices of task k.
inline RestrictedSolution solve_restricted_impl(
    const MTLProblem& prob, const Hyperparameters& hyper,
    const std::vector<std::vector<int>>& supports) {
    const Eigen::Index p = prob.p(), K = prob.K();
    std::vector<int> offset(K + 1, 0);
    for (Eigen::Index k = 0; k < K; ++k)
        offset[k + 1] = offset[k] + int(supports[k].size());
    const int m = offset[K];

    RestrictedSolution sol;
    sol.B = MatrixXd::Zero(p, K);
    if (m > 0) {
        MatrixXd Q = MatrixXd::Zero(m, m);
        VectorXd c = VectorXd::Zero(m);
        for (Eigen::Index k = 0; k < K; ++k) {
            const auto& t = prob.tasks[k];
            const auto& S = supports[k];
            const int mk = int(S.size());
            if (mk == 0) continue;
            MatrixXd Xs(t.n(), mk);
            for (int a = 0; a < mk; ++a) Xs.col(a) = t.X.col(S[a]);
            const double inv_n = 1.0 / double(t.n());
            Q.block(offset[k], offset[k], mk, mk) =
                inv_n * (Xs.transpose() * Xs);
            Q.block(offset[k], offset[k], mk, mk).diagonal().array() +=
                hyper.alpha + hyper.lambda;
            c.segment(offset[k], mk) = inv_n * (Xs.transpose() * t.y);
        }
        if (hyper.lambda > 0.0) {
            // -(lambda/K) coupling for every pair of tasks active at a row.
            std::vector<std::vector<std::pair<int, int>>> by_row(p);
            for (Eigen::Index k = 0; k < K; ++k)
                for (size_t a = 0; a < supports[k].size(); ++a)
                    by_row[supports[k][a]].push_back({int(k), offset[k] + int(a)});
            const double coup = hyper.lambda / double(K);
            for (Eigen::Index j = 0; j < p; ++j)
                for (const auto& [ka, ia] : by_row[j])
                    for (const auto& [kb, ib] : by_row[j]) {
                        (void)ka;
                        (void)kb;
                        Q(ia, ib) -= coup;
                    }
        }
        auto solve_with = [&](const MatrixXd& Qm) {
            Eigen::LDLT<MatrixXd> ldlt(Qm);
            VectorXd theta = ldlt.solve(c);
            const double res = (Qm * theta - c).cwiseAbs().maxCoeff();
            const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
            return std::make_pair(theta, res <= 1e-8 * scale);
        };
        auto [theta, ok] = solve_with(Q);
        if (!ok) {
            MatrixXd Qj = Q;
            Qj.diagonal().array() += 1e-10;
            auto [theta2, ok2] = solve_with(Qj);
            require(ok2, ErrorKind::singular_system,
                    "restricted normal equations are singular even with jitter");
            theta = theta2;
            sol.jittered = true;
        }
        for (Eigen::Index k = 0; k < K; ++k)
            for (size_t a = 0; a < supports[k].size(); ++a)
                sol.B(supports[k][a], k) = theta[offset[k] + int(a)];
    }

    const VectorXd bmean = sol.B.rowwise().mean();
    double obj = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& t = prob.tasks[k];
        obj += (t.y - t.X * sol.B.col(k)).squaredNorm() / double(t.n());
        if (hyper.lambda > 0.0)
            obj += hyper.lambda * (sol.B.col(k) - bmean).squaredNorm();
        if (hyper.alpha > 0.0) obj += hyper.alpha * sol.B.col(k).squaredNorm();
    }
    sol.objective = obj;
    return sol;
}

inline std::vector<std::vector<int>> supports_from_z(const MatrixXi& Z) {
    std::vector<std::vector<int>> supports(Z.cols());
    for (Eigen::Index k = 0; k < Z.cols(); ++k)
        for (Eigen::Index j = 0; j < Z.rows(); ++j)
            if (Z(j, k)) supports[k].push_back(int(j));
    return supports;
}

/// delta * sum_k ||z_k - z_bar||^2 from per-row active counts.
inline double zbar_penalty(const std::vector<std::vector<int>>& supports,
                           Eigen::Index p, Eigen::Index K, double delta) {
    if (delta <= 0.0) return 0.0;
    std::vector<int> count(p, 0);
    for (const auto& S : supports)
        for (int j : S) ++count[j];
    double h = 0.0;
    const double Kd = double(K);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double c = double(count[j]);
        h += c - c * c / Kd;
    }
    return delta * h;
}

}  // namespace detail

/// Exact coefficients for a fixed support matrix. Positive definiteness can
/// fail only without a ridge term; a 1e-10 jitter path is then taken and
/// flagged.
inline RestrictedSolution solve_restricted(const MTLProblem& prob,
                                           const Hyperparameters& hyper,
                                           const MatrixXi& Z) {
    validate_problem(prob);
    validate_hyper(hyper, prob.p());
    require(Z.rows() == prob.p() && Z.cols() == prob.K(),
            ErrorKind::dimension_mismatch, "Z has wrong shape");
    for (Eigen::Index k = 0; k < prob.K(); ++k) {
        int card = 0;
        for (Eigen::Index j = 0; j < prob.p(); ++j) {
            require(Z(j, k) == 0 || Z(j, k) == 1, ErrorKind::infeasible,
                    "Z entries must be 0/1");
            card += Z(j, k);
        }
        require(card <= hyper.s, ErrorKind::infeasible,
                "Z column exceeds the support budget");
        if (hyper.common_support)
            require(Z.col(k) == Z.col(0), ErrorKind::infeasible,
                    "common-support Z must have identical columns");
    }
    return detail::solve_restricted_impl(prob, hyper, detail::supports_from_z(Z));
}

struct OracleLimits {
    int max_p = 10;
    int max_s = 3;
    int max_K = 3;
    double max_enumerations = 1e7;
};

struct OracleResult {
    ModelFit fit;
    double objective = 0.0;
    long long supports_enumerated = 0;
};

namespace detail {

inline std::vector<std::vector<int>> all_subsets_up_to(int p, int s) {
    std::vector<std::vector<int>> subsets;
    subsets.push_back({});  // the empty support is feasible under a budget
    for (int size = 1; size <= s; ++size) {
        std::vector<int> combo(size);
        for (int i = 0; i < size; ++i) combo[i] = i;
        while (true) {
            subsets.push_back(combo);
            int i = size - 1;
            while (i >= 0 && combo[i] == p - size + i) --i;
            if (i < 0) break;
            ++combo[i];
            for (int l = i + 1; l < size; ++l) combo[l] = combo[l - 1] + 1;
        }
    }
    return subsets;
}

/// Column-major flattened-Z lexicographic order for deterministic ties.
inline bool z_lex_less(const MatrixXi& a, const MatrixXi& b) {
    for (Eigen::Index k = 0; k < a.cols(); ++k)
        for (Eigen::Index j = 0; j < a.rows(); ++j) {
            if (a(j, k) != b(j, k)) return a(j, k) < b(j, k);
        }
    return false;
}

}  // namespace detail

/// Global optimum by exhaustive support enumeration. Heterogeneous mode walks
/// the K-fold product of all budget-feasible subsets; common mode walks one
/// shared subset. Desk-scale only; refuses oversized instances.
inline OracleResult solve_exact(const MTLProblem& prob, const Hyperparameters& hyper,
                                const OracleLimits& limits = {}) {
    validate_problem(prob);
    validate_hyper(hyper, prob.p());
    const int p = int(prob.p()), K = int(prob.K()), s = hyper.s;
    double n_subsets = 1.0;  // empty support
    double running = 1.0;
    for (int size = 1; size <= s; ++size) {
        running = running * double(p - size + 1) / double(size);
        n_subsets += running;
    }
    const double count =
        hyper.common_support ? n_subsets : std::pow(n_subsets, double(K));
    require(p <= limits.max_p && s <= limits.max_s && K <= limits.max_K &&
                count <= limits.max_enumerations,
            ErrorKind::limit_exceeded,
            "exact enumeration refused: " + std::to_string((long long)count) +
                " support configurations (p=" + std::to_string(p) + ", s=" +
                std::to_string(s) + ", K=" + std::to_string(K) + ")");

    auto [cprob, centering] = center_problem(prob);
    const auto subsets = detail::all_subsets_up_to(p, s);

    double best_obj = std::numeric_limits<double>::infinity();
    MatrixXd best_B;
    MatrixXi best_Z;
    long long enumerated = 0;

    auto consider = [&](const std::vector<std::vector<int>>& supports) {
        ++enumerated;
        RestrictedSolution sol =
            detail::solve_restricted_impl(cprob, hyper, supports);
        double obj = sol.objective;
        if (!hyper.common_support)
            obj += detail::zbar_penalty(supports, p, K, hyper.delta);
        MatrixXi Z = MatrixXi::Zero(p, K);
        for (int k = 0; k < K; ++k)
            for (int j : supports[k]) Z(j, k) = 1;
        if (obj < best_obj ||
            (obj == best_obj && detail::z_lex_less(Z, best_Z))) {
            best_obj = obj;
            best_B = sol.B;
            best_Z = Z;
        }
    };

    if (hyper.common_support) {
        std::vector<std::vector<int>> supports(K);
        for (const auto& S : subsets) {
            for (int k = 0; k < K; ++k) supports[k] = S;
            consider(supports);
        }
    } else {
        std::vector<size_t> idx(K, 0);
        std::vector<std::vector<int>> supports(K);
        while (true) {
            for (int k = 0; k < K; ++k) supports[k] = subsets[idx[k]];
            consider(supports);
            int k = K - 1;
            while (k >= 0 && ++idx[k] == subsets.size()) {
                idx[k] = 0;
                --k;
            }
            if (k < 0) break;
        }
    }

    OracleResult res;
    res.fit.B = best_B;
    res.fit.Z = best_Z;
    res.fit.refresh_averages();
    recover_intercepts(res.fit, centering);
    res.fit.objective_trace = {best_obj};
    res.objective = best_obj;
    res.supports_enumerated = enumerated;
    return res;
}

/// Data-driven big-M: twice the largest ridge coefficient magnitude across
/// tasks (penalty alpha + lambda + 1e-4 on centered data), floored at 1.
inline double choose_big_m(const MTLProblem& prob, const Hyperparameters& hyper) {
    validate_problem(prob);
    auto [cprob, centering] = center_problem(prob);
    const double pen = hyper.alpha + hyper.lambda + 1e-4;
    double max_coef = 0.0;
    for (const auto& t : cprob.tasks) {
        const double inv_n = 1.0 / double(t.n());
        MatrixXd G = inv_n * (t.X.transpose() * t.X);
        G.diagonal().array() += pen;
        const VectorXd beta = G.ldlt().solve(inv_n * (t.X.transpose() * t.y));
        max_coef = std::max(max_coef, beta.cwiseAbs().maxCoeff());
    }
    return std::max(1.0, 2.0 * max_coef);
}

}  // namespace smtl
