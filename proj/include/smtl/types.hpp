#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "smtl/error.hpp"

namespace smtl {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// One task: design matrix (n_k x p), outcome (n_k) and an identifier.
struct TaskDataset {
    std::string id;
    MatrixXd X;
    VectorXd y;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

/// K tasks sharing a column count p. Task order is fixed and defines the
/// task index; ids must be unique.
struct MTLProblem {
    std::vector<TaskDataset> tasks;

    Eigen::Index K() const { return static_cast<Eigen::Index>(tasks.size()); }
    Eigen::Index p() const { return tasks.empty() ? 0 : tasks.front().p(); }
};

inline void validate_task(const TaskDataset& t) {
    require(t.n() >= 1 && t.p() >= 1, ErrorKind::dimension_mismatch,
            "task '" + t.id + "' must have n >= 1 and p >= 1");
    require(t.y.size() == t.n(), ErrorKind::dimension_mismatch,
            "task '" + t.id + "': y length " + std::to_string(t.y.size()) +
                " != n " + std::to_string(t.n()));
    require(t.X.allFinite(), ErrorKind::non_finite,
            "task '" + t.id + "': X has non-finite entries");
    require(t.y.allFinite(), ErrorKind::non_finite,
            "task '" + t.id + "': y has non-finite entries");
}

inline void validate_problem(const MTLProblem& prob) {
    require(prob.K() >= 1, ErrorKind::dimension_mismatch, "problem has no tasks");
    const Eigen::Index p = prob.p();
    for (Eigen::Index k = 0; k < prob.K(); ++k) {
        const auto& t = prob.tasks[k];
        validate_task(t);
        require(t.p() == p, ErrorKind::dimension_mismatch,
                "task '" + t.id + "' has p=" + std::to_string(t.p()) +
                    " but task '" + prob.tasks.front().id + "' has p=" +
                    std::to_string(p));
        for (Eigen::Index l = 0; l < k; ++l)
            require(prob.tasks[l].id != t.id, ErrorKind::schema,
                    "duplicate task id '" + t.id + "'");
    }
}

/// Penalty weights for one model. `delta` is the post-standardization value
/// actually fed to the solver; with common_support=true it is ignored
/// (the delta -> infinity limit).
struct Hyperparameters {
    int s = 1;
    double lambda = 0.0;
    double alpha = 0.0;
    double delta = 0.0;
    bool common_support = false;
};

inline void validate_hyper(const Hyperparameters& h, Eigen::Index p) {
    require(h.s >= 1, ErrorKind::config, "support budget s must be >= 1");
    require(h.s <= p, ErrorKind::config,
            "support budget s=" + std::to_string(h.s) + " exceeds p=" +
                std::to_string(p));
    require(std::isfinite(h.lambda) && h.lambda >= 0.0, ErrorKind::config,
            "lambda must be finite and >= 0");
    require(std::isfinite(h.alpha) && h.alpha >= 0.0, ErrorKind::config,
            "alpha must be finite and >= 0");
    require(std::isfinite(h.delta) && h.delta >= 0.0, ErrorKind::config,
            "delta must be finite and >= 0");
}

/// The six estimator variants. Each fixes which penalties may be active.
enum class Method { TsSr, Bbar, ZbarL2, ZbarBbar, CsL2, CsBbar };

struct MethodMask {
    bool lambda_tunable = false;
    bool alpha_tunable = false;
    bool delta_tunable = false;
    bool common_support = false;

    int n_tunable() const {
        // s is always tunable
        return 1 + int(lambda_tunable) + int(alpha_tunable) + int(delta_tunable);
    }
};

inline MethodMask method_mask(Method m) {
    switch (m) {
        case Method::TsSr:     return {false, true,  false, false};
        case Method::Bbar:     return {true,  false, false, false};
        case Method::ZbarL2:   return {false, true,  true,  false};
        case Method::ZbarBbar: return {true,  false, true,  false};
        case Method::CsL2:     return {false, true,  false, true};
        case Method::CsBbar:   return {true,  false, false, true};
    }
    fail(ErrorKind::config, "invalid method enum");
}

inline std::string method_name(Method m) {
    switch (m) {
        case Method::TsSr:     return "TS-SR";
        case Method::Bbar:     return "Bbar";
        case Method::ZbarL2:   return "Zbar+L2";
        case Method::ZbarBbar: return "Zbar+Bbar";
        case Method::CsL2:     return "CS+L2";
        case Method::CsBbar:   return "CS+Bbar";
    }
    fail(ErrorKind::config, "invalid method enum");
}

inline Method parse_method(const std::string& name) {
    for (Method m : {Method::TsSr, Method::Bbar, Method::ZbarL2,
                     Method::ZbarBbar, Method::CsL2, Method::CsBbar})
        if (method_name(m) == name) return m;
    fail(ErrorKind::config, "unknown method '" + name +
                                "' (expected one of TS-SR, Bbar, Zbar+L2, "
                                "Zbar+Bbar, CS+L2, CS+Bbar)");
}

/// Checks that hyperparameters respect a method's mask (forced-zero penalties
/// are zero, common-support flag agrees).
inline void validate_hyper_for_method(const Hyperparameters& h, Method m) {
    const MethodMask mask = method_mask(m);
    require(mask.lambda_tunable || h.lambda == 0.0, ErrorKind::config,
            method_name(m) + " does not use lambda");
    require(mask.alpha_tunable || h.alpha == 0.0, ErrorKind::config,
            method_name(m) + " does not use alpha");
    require(mask.delta_tunable || h.delta == 0.0 || mask.common_support,
            ErrorKind::config, method_name(m) + " does not use delta");
    require(h.common_support == mask.common_support, ErrorKind::config,
            method_name(m) + (mask.common_support
                                  ? " requires common_support=true"
                                  : " requires common_support=false"));
}

/// Solution of one fit: coefficients, binary supports, intercepts, cached
/// averages and the per-sweep objective values.
struct ModelFit {
    MatrixXd B;             // p x K
    MatrixXi Z;             // p x K, entries in {0,1}
    VectorXd intercepts;    // K
    VectorXd beta_bar;      // p, row means of B
    VectorXd z_bar;         // p, row means of Z
    std::vector<double> objective_trace;

    int sweeps = 0;
    int swaps_committed = 0;
    long long coords_touched = 0;

    Eigen::Index p() const { return B.rows(); }
    Eigen::Index K() const { return B.cols(); }

    void refresh_averages() {
        beta_bar = B.rowwise().mean();
        z_bar = Z.cast<double>().rowwise().mean();
    }
};

inline ModelFit zero_fit(Eigen::Index p, Eigen::Index K) {
    ModelFit f;
    f.B = MatrixXd::Zero(p, K);
    f.Z = MatrixXi::Zero(p, K);
    f.intercepts = VectorXd::Zero(K);
    f.refresh_averages();
    return f;
}

/// Structural feasibility: complementarity, per-task cardinality, and (if
/// requested) identical support columns.
inline void validate_fit(const ModelFit& fit, Eigen::Index p, Eigen::Index K,
                         const Hyperparameters& hyper) {
    require(fit.B.rows() == p && fit.B.cols() == K, ErrorKind::dimension_mismatch,
            "fit B has wrong shape");
    require(fit.Z.rows() == p && fit.Z.cols() == K, ErrorKind::dimension_mismatch,
            "fit Z has wrong shape");
    require(fit.intercepts.size() == K, ErrorKind::dimension_mismatch,
            "fit intercepts have wrong length");
    require(fit.B.allFinite() && fit.intercepts.allFinite(), ErrorKind::non_finite,
            "fit has non-finite entries");
    for (Eigen::Index k = 0; k < K; ++k) {
        int card = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const int z = fit.Z(j, k);
            require(z == 0 || z == 1, ErrorKind::infeasible, "Z entries must be 0/1");
            card += z;
            require(fit.B(j, k) == 0.0 || z == 1, ErrorKind::infeasible,
                    "complementarity violated at (j=" + std::to_string(j) +
                        ", k=" + std::to_string(k) + ")");
        }
        require(card <= hyper.s, ErrorKind::infeasible,
                "task " + std::to_string(k) + " support size " +
                    std::to_string(card) + " exceeds s=" + std::to_string(hyper.s));
    }
    if (hyper.common_support)
        for (Eigen::Index k = 1; k < K; ++k)
            require(fit.Z.col(k) == fit.Z.col(0), ErrorKind::infeasible,
                    "common-support fit has differing Z columns");
}

}  // namespace smtl
