#pragma once

#include <cmath>

#include "smtl/types.hpp"

namespace smtl {

struct ObjectiveTerms {
    double data = 0.0;   // sum_k (1/n_k) ||y_k - X_k b_k - b0_k 1||^2
    double bbar = 0.0;   // lambda * sum_k ||b_k - bbar||^2
    double ridge = 0.0;  // alpha * sum_k ||b_k||^2
    double zbar = 0.0;   // delta * sum_k ||z_k - zbar||^2 (0 in common mode)

    double total() const { return data + bbar + ridge + zbar; }
};

/// Term-by-term objective of the joint estimator. beta_bar and z_bar are
/// recomputed from B and Z, never read from the fit. Reductions run in
/// ascending task order so values are reproducible bit-for-bit.
inline ObjectiveTerms objective_terms(const MTLProblem& prob, const ModelFit& fit,
                                      const Hyperparameters& hyper) {
    validate_problem(prob);
    validate_hyper(hyper, prob.p());
    validate_fit(fit, prob.p(), prob.K(), hyper);

    const Eigen::Index K = prob.K();
    const VectorXd beta_bar = fit.B.rowwise().mean();

    ObjectiveTerms t;
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& task = prob.tasks[k];
        const VectorXd resid = task.y - task.X * fit.B.col(k) -
                               VectorXd::Constant(task.n(), fit.intercepts[k]);
        t.data += resid.squaredNorm() / double(task.n());
        if (hyper.lambda > 0.0)
            t.bbar += hyper.lambda * (fit.B.col(k) - beta_bar).squaredNorm();
        if (hyper.alpha > 0.0)
            t.ridge += hyper.alpha * fit.B.col(k).squaredNorm();
    }
    if (!hyper.common_support && hyper.delta > 0.0) {
        const VectorXd z_bar = fit.Z.cast<double>().rowwise().mean();
        for (Eigen::Index k = 0; k < K; ++k)
            t.zbar += hyper.delta *
                      (fit.Z.col(k).cast<double>() - z_bar).squaredNorm();
    }
    require(std::isfinite(t.total()), ErrorKind::non_finite,
            "objective evaluated to a non-finite value");
    return t;
}

inline double objective(const MTLProblem& prob, const ModelFit& fit,
                        const Hyperparameters& hyper) {
    return objective_terms(prob, fit, hyper).total();
}

/// Predictions for task k on new rows: X_new * B[:,k] + intercept_k.
inline VectorXd predict(const ModelFit& fit, const MatrixXd& X_new,
                        Eigen::Index k) {
    require(k >= 0 && k < fit.K(), ErrorKind::dimension_mismatch,
            "task index " + std::to_string(k) + " out of range");
    require(X_new.cols() == fit.p(), ErrorKind::dimension_mismatch,
            "X_new has " + std::to_string(X_new.cols()) + " columns, expected " +
                std::to_string(fit.p()));
    return (X_new * fit.B.col(k)).array() + fit.intercepts[k];
}

}  // namespace smtl
