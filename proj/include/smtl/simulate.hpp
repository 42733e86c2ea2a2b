#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "smtl/rng.hpp"
#include "smtl/types.hpp"

namespace smtl {

enum class SimDesign { main, partitioned };

/// Generator knobs. The main design draws each task's support as a uniform
/// s-subset of the odd indices {1,3,...,2q-1}; the partitioned design uses a
/// fixed common block, an always-zero block, and a Bernoulli block.
struct SimConfig {
    int K = 4;
    int p = 250;
    int n_train = 50;
    int n_test = 50;
    double rho = 0.5;
    int s = 10;
    int q = 10;                 // pool size; s/q is the homogeneity ratio
    double tau = 1.0;           // noise scale: sigma2_k ~ Unif(tau/2, 2 tau)
    double sigma2_beta = 50.0;
    double mu_min = 0.2;        // |mu| band for nonzero coefficient means
    double mu_max = 0.5;
    bool share_mu = false;      // one mu per coordinate instead of per task
    double intercept = 0.0;
    SimDesign design = SimDesign::main;
    int common_card = 10;       // partitioned design knobs
    int hetero_max = 5;
    double p_z = 0.5;
    std::uint64_t seed = 0;
};

inline void validate_sim_config(const SimConfig& c) {
    require(c.K >= 1 && c.p >= 1 && c.n_train >= 1 && c.n_test >= 1,
            ErrorKind::config, "simulation sizes must be positive");
    require(c.rho >= 0.0 && c.rho < 1.0, ErrorKind::config,
            "rho must lie in [0, 1)");
    require(c.tau > 0.0 && c.sigma2_beta >= 0.0, ErrorKind::config,
            "tau must be positive and sigma2_beta nonnegative");
    require(c.mu_min >= 0.0 && c.mu_max >= c.mu_min, ErrorKind::config,
            "mu band must satisfy 0 <= mu_min <= mu_max");
    if (c.design == SimDesign::main) {
        require(c.s >= 1 && c.q >= c.s, ErrorKind::config, "need 1 <= s <= q");
        require(2 * c.q - 1 <= c.p, ErrorKind::config,
                "odd-index support pool needs 2q-1 <= p");
    } else {
        require(c.common_card >= 0 && c.hetero_max >= 0 &&
                    c.common_card + c.hetero_max >= 1,
                ErrorKind::config, "partitioned blocks must not both be empty");
        require(c.p_z >= 0.0 && c.p_z <= 1.0, ErrorKind::config,
                "p_z must lie in [0, 1]");
        require(2 * (c.common_card + c.hetero_max) - 1 <= c.p, ErrorKind::config,
                "partitioned design blocks do not fit into p");
    }
}

struct SimulationTruth {
    MatrixXd B_star;       // p x K effective coefficients (beta .* z)
    MatrixXi Z_star;       // p x K
    VectorXd intercepts;   // K
    VectorXd sigma2;       // K noise variances
};

struct SimulatedStudy {
    MTLProblem train;
    MTLProblem test;
    SimulationTruth truth;
};

/// Exponential-correlation covariance Sigma_{l,r} = rho^{|l-r|} and its
/// lower Cholesky factor for sampling.
struct CovarianceModel {
    MatrixXd sigma;
    MatrixXd chol;  // lower triangular, chol * chol^T = sigma
};

inline CovarianceModel make_covariance(int p, double rho) {
    require(p >= 1, ErrorKind::config, "p must be positive");
    require(rho >= 0.0 && rho < 1.0, ErrorKind::config, "rho must lie in [0, 1)");
    CovarianceModel cov;
    cov.sigma.resize(p, p);
    for (int l = 0; l < p; ++l)
        for (int r = 0; r < p; ++r)
            cov.sigma(l, r) = l == r ? 1.0 : std::pow(rho, std::abs(l - r));
    cov.chol = Eigen::LLT<MatrixXd>(cov.sigma).matrixL();
    return cov;
}

/// Supports of the main design: each column an independent uniform s-subset
/// of the 1-based odd indices {1, 3, ..., 2q-1}.
inline MatrixXi draw_supports_main(int K, int s, int q, std::uint64_t seed) {
    require(s >= 1 && q >= s, ErrorKind::config, "need 1 <= s <= q");
    const int p = 2 * q - 1;
    MatrixXi Z = MatrixXi::Zero(p, K);
    auto rng = make_rng(derive_seed(seed, 0xA001));
    for (int k = 0; k < K; ++k)
        for (int i : sample_without_replacement(q, s, rng))
            Z(2 * i, k) = 1;  // 1-based odd index 2i+1
    return Z;
}

namespace detail {

inline MatrixXi draw_supports_partitioned(const SimConfig& c,
                                          std::mt19937_64& rng) {
    MatrixXi Z = MatrixXi::Zero(c.p, c.K);
    for (int i = 0; i < c.common_card; ++i)
        Z.row(2 * i).setOnes();  // alternating 1,0,1,0,...
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < c.K; ++k)
        for (int i = 0; i < c.hetero_max; ++i) {
            const int row = 2 * (c.common_card + i);
            if (unif(rng) < c.p_z) Z(row, k) = 1;
        }
    return Z;
}

inline MatrixXd sample_rows(int n, const CovarianceModel& cov,
                            std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int p = int(cov.sigma.rows());
    MatrixXd G(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) G(i, j) = gauss(rng);
    return G * cov.chol.transpose();
}

}  // namespace detail

/// Draws one replicate: supports and coefficients per design, exponentially
/// correlated covariates, per-task noise levels, and matched train/test sets
/// from the same truth.
inline SimulatedStudy simulate(const SimConfig& config) {
    validate_sim_config(config);
    auto support_rng = make_rng(derive_seed(config.seed, 1));
    auto beta_rng = make_rng(derive_seed(config.seed, 2));
    auto noise_rng = make_rng(derive_seed(config.seed, 3));
    auto data_rng = make_rng(derive_seed(config.seed, 4));

    const int p = config.p, K = config.K;
    SimulatedStudy study;

    MatrixXi Z;
    if (config.design == SimDesign::main) {
        const MatrixXi pool = draw_supports_main(K, config.s, config.q,
                                                 derive_seed(config.seed, 1));
        Z = MatrixXi::Zero(p, K);
        Z.topRows(pool.rows()) = pool;
    } else {
        Z = detail::draw_supports_partitioned(config, support_rng);
    }

    std::uniform_real_distribution<double> mag(config.mu_min, config.mu_max);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sd_beta = std::sqrt(config.sigma2_beta);

    VectorXd shared_mu;
    if (config.share_mu) {
        shared_mu.resize(p);
        for (int j = 0; j < p; ++j) {
            const double m = mag(beta_rng);
            shared_mu[j] = coin(beta_rng) < 0.5 ? -m : m;
        }
    }
    MatrixXd B = MatrixXd::Zero(p, K);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < p; ++j) {
            if (!Z(j, k)) continue;
            double mu;
            if (config.share_mu) {
                mu = shared_mu[j];
            } else {
                const double m = mag(beta_rng);
                mu = coin(beta_rng) < 0.5 ? -m : m;
            }
            B(j, k) = mu + sd_beta * gauss(beta_rng);
        }

    VectorXd sigma2(K);
    std::uniform_real_distribution<double> noise_level(config.tau / 2.0,
                                                       2.0 * config.tau);
    for (int k = 0; k < K; ++k) sigma2[k] = noise_level(noise_rng);

    const CovarianceModel cov = make_covariance(p, config.rho);
    auto make_split = [&](int n) {
        MTLProblem prob;
        prob.tasks.reserve(K);
        for (int k = 0; k < K; ++k) {
            TaskDataset t;
            t.id = "task" + std::to_string(k + 1);
            t.X = detail::sample_rows(n, cov, data_rng);
            const double sd = std::sqrt(sigma2[k]);
            t.y = t.X * B.col(k);
            t.y.array() += config.intercept;
            for (int i = 0; i < n; ++i) t.y[i] += sd * gauss(data_rng);
            prob.tasks.push_back(std::move(t));
        }
        return prob;
    };
    study.train = make_split(config.n_train);
    study.test = make_split(config.n_test);

    study.truth.B_star = B;
    study.truth.Z_star = Z;
    study.truth.intercepts = VectorXd::Constant(K, config.intercept);
    study.truth.sigma2 = sigma2;
    return study;
}

}  // namespace smtl
