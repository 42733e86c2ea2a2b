#pragma once

#include <cmath>
#include <set>

#include "smtl/objective.hpp"
#include "smtl/simulate.hpp"
#include "smtl/types.hpp"

namespace smtl {

/// Support-structure diagnostics: coordinates in any support, coordinates in
/// every support, and whether every row count falls in {0, 1, K}.
struct SupportDiagnostics {
    std::set<int> s_all;
    std::set<int> s_common;
    bool is_regular = true;
    int hetero_count = 0;
};

inline SupportDiagnostics support_sets(const MatrixXi& Z) {
    SupportDiagnostics d;
    const Eigen::Index p = Z.rows(), K = Z.cols();
    for (Eigen::Index j = 0; j < p; ++j) {
        int count = 0;
        for (Eigen::Index k = 0; k < K; ++k) {
            require(Z(j, k) == 0 || Z(j, k) == 1, ErrorKind::infeasible,
                    "Z entries must be 0/1");
            count += Z(j, k);
        }
        if (count >= 1) d.s_all.insert(int(j));
        if (count == K) d.s_common.insert(int(j));
        if (count != 0 && count != 1 && count != int(K)) d.is_regular = false;
    }
    d.hetero_count = int(d.s_all.size() - d.s_common.size());
    return d;
}

struct MetricRecord {
    double prediction_rmse = 0.0;     // avg over tasks of per-task test RMSE
    double coefficient_rmse = 0.0;    // avg over tasks, intercept included
    double avg_tp = 0.0;
    double avg_fp = 0.0;
    double avg_fn = 0.0;
    double f1 = 0.0;
    double concordance = 0.0;          // as-written formula, normalizer p
    double concordance_normalized = 0.0;
    int hetero_count = 0;
};

/// All per-replicate performance metrics of a fit against simulation truth.
/// F1 uses the standard false-positive definition (estimated-only) and the
/// 0/0 -> 0 convention; both concordance normalizations are reported.
inline MetricRecord evaluate(const ModelFit& fit, const SimulationTruth& truth,
                             const MTLProblem& test) {
    validate_problem(test);
    const Eigen::Index p = test.p(), K = test.K();
    require(fit.p() == p && fit.K() == K, ErrorKind::dimension_mismatch,
            "fit does not match the test problem");
    require(truth.B_star.rows() == p && truth.B_star.cols() == K &&
                truth.Z_star.rows() == p && truth.Z_star.cols() == K,
            ErrorKind::dimension_mismatch, "truth does not match the test problem");

    MetricRecord m;
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& t = test.tasks[k];
        const VectorXd pred = predict(fit, t.X, k);
        m.prediction_rmse += (t.y - pred).norm() / std::sqrt(double(t.n()));

        double coef_sq = (truth.B_star.col(k) - fit.B.col(k)).squaredNorm();
        const double di = truth.intercepts[k] - fit.intercepts[k];
        coef_sq += di * di;
        m.coefficient_rmse += std::sqrt(coef_sq) / std::sqrt(double(p + 1));

        double tp = 0, fp = 0, fn = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const int zt = truth.Z_star(j, k), zh = fit.Z(j, k);
            tp += zt * zh;
            fn += zt * (1 - zh);
            fp += zh * (1 - zt);
        }
        m.avg_tp += tp;
        m.avg_fp += fp;
        m.avg_fn += fn;
        if (tp > 0) {
            const double recall = tp / (tp + fn);
            const double precision = tp / (tp + fp);
            m.f1 += 2.0 * precision * recall / (precision + recall);
        }
    }
    m.prediction_rmse /= double(K);
    m.coefficient_rmse /= double(K);
    m.avg_tp /= double(K);
    m.avg_fp /= double(K);
    m.avg_fn /= double(K);
    m.f1 /= double(K);

    if (K >= 2) {
        double agree = 0.0, max_agree = 0.0;
        for (Eigen::Index k = 0; k < K; ++k)
            for (Eigen::Index l = 0; l < k; ++l) {
                agree += double(fit.Z.col(k).dot(fit.Z.col(l)));
                max_agree += double(std::min(fit.Z.col(k).sum(), fit.Z.col(l).sum()));
            }
        const double pairs = double(K) * double(K - 1) / 2.0;
        m.concordance = agree / (pairs * double(p));
        m.concordance_normalized = max_agree > 0.0 ? agree / max_agree : 0.0;
    } else {
        m.concordance = 1.0;
        m.concordance_normalized = 1.0;
    }
    m.hetero_count = support_sets(fit.Z).hetero_count;
    return m;
}

}  // namespace smtl
