#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace smtl;
using namespace smtl_test;

namespace {

SimulationTruth truth_from(const MatrixXd& B, const MatrixXi& Z) {
    SimulationTruth t;
    t.B_star = B;
    t.Z_star = Z;
    t.intercepts = VectorXd::Zero(B.cols());
    t.sigma2 = VectorXd::Ones(B.cols());
    return t;
}

}  // namespace

TEST_CASE("support_sets follows the definitions", "[metrics]") {
    MatrixXi Z(2, 2);
    Z << 1, 1, 0, 1;  // task 1 holds {0}, task 2 holds {0,1}
    const SupportDiagnostics d = support_sets(Z);
    CHECK(d.s_all == std::set<int>{0, 1});
    CHECK(d.s_common == std::set<int>{0});
    CHECK(d.hetero_count == 1);
    CHECK(d.is_regular);  // row counts 2 and 1 with K=2

    MatrixXi same(3, 2);
    same << 1, 1, 0, 0, 1, 1;
    const SupportDiagnostics e = support_sets(same);
    CHECK(e.s_all == e.s_common);
    CHECK(e.hetero_count == 0);
    CHECK(e.is_regular);

    MatrixXi irregular(2, 3);
    irregular << 1, 1, 0, 0, 0, 0;  // row count 2 with K=3
    CHECK_FALSE(support_sets(irregular).is_regular);
}

TEST_CASE("evaluate on exact and degenerate recoveries", "[metrics]") {
    const int p = 4, K = 2;
    MatrixXi Z(p, K);
    Z << 1, 1, 1, 1, 0, 0, 0, 0;  // both tasks hold {0,1}
    MatrixXd B = MatrixXd::Zero(p, K);
    B(0, 0) = 1.0;
    B(1, 0) = -1.0;
    B(0, 1) = 0.5;
    B(1, 1) = 2.0;
    const SimulationTruth truth = truth_from(B, Z);

    MTLProblem test;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < K; ++k) {
        TaskDataset t;
        t.id = "t" + std::to_string(k);
        t.X.resize(10, p);
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < p; ++j) t.X(i, j) = gauss(rng);
        t.y = t.X * B.col(k);  // noiseless
        test.tasks.push_back(std::move(t));
    }

    SECTION("perfect recovery") {
        ModelFit fit = zero_fit(p, K);
        fit.B = B;
        fit.Z = Z;
        fit.refresh_averages();
        const MetricRecord m = evaluate(fit, truth, test);
        CHECK(m.f1 == 1.0);
        CHECK(m.prediction_rmse == Catch::Approx(0.0).margin(1e-12));
        CHECK(m.coefficient_rmse == Catch::Approx(0.0).margin(1e-12));
        CHECK(m.avg_tp == 2.0);
        CHECK(m.avg_fp == 0.0);
        CHECK(m.avg_fn == 0.0);
        // Identical supports of size 2 over p=4: as-written concordance is
        // 2/4, the normalized variant is 1.
        CHECK(m.concordance == Catch::Approx(0.5));
        CHECK(m.concordance_normalized == 1.0);
        CHECK(m.hetero_count == 0);
    }
    SECTION("all-zero estimate hits the 0/0 convention") {
        const ModelFit fit = zero_fit(p, K);
        const MetricRecord m = evaluate(fit, truth, test);
        CHECK(m.f1 == 0.0);
        CHECK(m.avg_tp == 0.0);
        CHECK(m.avg_fn == 2.0);
    }
}

TEST_CASE("metric ranges and the TP+FN partition", "[metrics]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int p = 6, K = 3;
        const MTLProblem test = random_problem(seed, K, p, 8);
        ModelFit fit = random_fit(seed + 1, p, K, 3);
        const ModelFit truth_fit = random_fit(seed + 2, p, K, 3);
        const SimulationTruth truth = truth_from(truth_fit.B, truth_fit.Z);
        const MetricRecord m = evaluate(fit, truth, test);
        CHECK((m.f1 >= 0.0 && m.f1 <= 1.0));
        CHECK((m.concordance >= 0.0 && m.concordance <= 1.0));
        CHECK((m.concordance_normalized >= 0.0 && m.concordance_normalized <= 1.0));
        for (int k = 0; k < K; ++k) {
            double tp = 0, fn = 0;
            for (int j = 0; j < p; ++j) {
                tp += truth.Z_star(j, k) * fit.Z(j, k);
                fn += truth.Z_star(j, k) * (1 - fit.Z(j, k));
            }
            CHECK(tp + fn == double(truth.Z_star.col(k).sum()));
        }
    }
}

TEST_CASE("concordance rises when a flip matches another task", "[metrics]") {
    const int p = 5, K = 2;
    const MTLProblem test = random_problem(7, K, p, 6);
    ModelFit fit = zero_fit(p, K);
    fit.Z(0, 0) = 1;
    fit.Z(0, 1) = 1;
    fit.Z(2, 1) = 1;
    fit.refresh_averages();
    const SimulationTruth truth = truth_from(MatrixXd::Zero(p, K), fit.Z);
    const double before = evaluate(fit, truth, test).concordance;
    fit.Z(2, 0) = 1;  // matches task 2's coordinate
    const double after = evaluate(fit, truth, test).concordance;
    CHECK(after > before);
}

TEST_CASE("evaluate is invariant to a shared coordinate permutation", "[metrics]") {
    const int p = 5, K = 2;
    const MTLProblem test = random_problem(9, K, p, 7);
    ModelFit fit = random_fit(10, p, K, 2);
    const ModelFit tf = random_fit(11, p, K, 2);
    const SimulationTruth truth = truth_from(tf.B, tf.Z);
    const MetricRecord base = evaluate(fit, truth, test);

    std::vector<int> perm{3, 0, 4, 1, 2};
    MTLProblem ptest = test;
    ModelFit pfit = fit;
    SimulationTruth ptruth = truth;
    for (int j = 0; j < p; ++j) {
        for (int k = 0; k < K; ++k) {
            ptest.tasks[k].X.col(j) = test.tasks[k].X.col(perm[j]);
            pfit.B(j, k) = fit.B(perm[j], k);
            pfit.Z(j, k) = fit.Z(perm[j], k);
            ptruth.B_star(j, k) = truth.B_star(perm[j], k);
            ptruth.Z_star(j, k) = truth.Z_star(perm[j], k);
        }
    }
    pfit.refresh_averages();
    const MetricRecord permuted = evaluate(pfit, ptruth, ptest);
    CHECK(permuted.f1 == Catch::Approx(base.f1));
    CHECK(permuted.concordance == Catch::Approx(base.concordance));
    CHECK(permuted.prediction_rmse == Catch::Approx(base.prediction_rmse));
    CHECK(permuted.coefficient_rmse == Catch::Approx(base.coefficient_rmse));
}
