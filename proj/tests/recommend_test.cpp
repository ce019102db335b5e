#include "deepcox/recommend.hpp"
#include "deepcox/simulate.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace deepcox;

namespace {

RiskNetwork treatment_network(std::uint64_t seed, Eigen::Index d = 3) {
    NetworkConfig cfg;
    cfg.hidden_layers = 2;
    cfg.nodes_per_layer = 6;
    cfg.activation = Activation::selu;
    cfg.dropout_rate = 0.5;
    return init_network(cfg, d, seed);
}

SurvivalDataset treated_dataset(Rng& rng, std::size_t n, Eigen::Index d) {
    std::vector<double> times(n);
    std::vector<int> events(n), arms(n);
    for (std::size_t i = 0; i < n; ++i) {
        times[i] = rng.exponential(2.0) + 1e-6;
        events[i] = rng.bernoulli(0.8);
        arms[i] = int(i % 2);
    }
    events[0] = 1;
    const auto base = testkit::make_dataset(testkit::random_matrix(rng, Eigen::Index(n), d), times, events);
    const SurvivalDataset labelled(base.covariates(), base.times(), base.events(), arms);
    return labelled.with_covariates(design_matrix(labelled, true));
}

} // namespace

TEST(RecFn, IdentityAndAntisymmetry) {
    Rng rng(81);
    const RiskModel net = treatment_network(1);
    LinearCoxModel lin;
    lin.beta = Vector{{0.3, -0.4, 0.7}};
    for (const RiskModel& model : {net, RiskModel(lin)}) {
        for (int k = 0; k < 50; ++k) {
            const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), double(rng.integer(0, 1))};
            EXPECT_EQ(rec_fn(model, x, 2, 1, 1), 0.0);
            EXPECT_EQ(rec_fn(model, x, 2, 1, 0), -rec_fn(model, x, 2, 0, 1));
        }
    }
}

TEST(RecFn, LinearModelIsConstant) {
    LinearCoxModel lin;
    lin.beta = Vector{{0.3, -0.4, 0.7}};
    Rng rng(82);
    for (int k = 0; k < 20; ++k) {
        const std::vector<double> x{rng.uniform(-5, 5), rng.uniform(-5, 5), 0.0};
        EXPECT_DOUBLE_EQ(rec_fn(lin, x, 2, 1, 0), 0.7);
        EXPECT_DOUBLE_EQ(rec_fn(lin, x, 2, 3, 1), 1.4);
    }
}

TEST(RecFn, SharedBiasDoesNotMatter) {
    Rng rng(83);
    auto net = treatment_network(2);
    auto shifted = net;
    shifted.layers().back().bias[0] += 4.25;
    for (int k = 0; k < 20; ++k) {
        const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0};
        EXPECT_NEAR(rec_fn(net, x, 2, 1, 0), rec_fn(shifted, x, 2, 1, 0), 1e-12);
    }
}

TEST(RecFn, DropoutIgnored) {
    const RiskModel net = treatment_network(3);
    const std::vector<double> x{0.2, -0.1, 0.0};
    EXPECT_EQ(rec_fn(net, x, 2, 1, 0), rec_fn(net, x, 2, 1, 0));
    EXPECT_THROW(rec_fn(net, x, 5, 1, 0), std::invalid_argument);
}

TEST(RecFn, GroundTruthTreatmentRisk) {
    // With h(x, tau) = tau * gaussian(x), rec_{1,0}(x) = gaussian(x).
    SimulationSpec spec;
    spec.risk_kind = RiskKind::gaussian;
    spec.lambda_max = 10.0;
    const auto rec = [&](double x0, double x1) {
        const std::vector<double> x{x0, x1};
        return 1.0 * true_risk(spec, x) - 0.0 * true_risk(spec, x);
    };
    EXPECT_NEAR(rec(0.0, 0.0), 2.302585092994046, 1e-12);
    EXPECT_GT(rec(0.0, 0.0), 0.0);
    EXPECT_LT(rec(3.0, 3.0), 1e-15);
}

TEST(Recommend, SignOfRecDecides) {
    LinearCoxModel lin;
    lin.beta = Vector{{0.0, 0.5}};
    const std::vector<double> x{1.0, 0.0};
    const std::vector<int> groups{0, 1};
    EXPECT_EQ(recommend_treatment(lin, x, 1, groups), 0);
    lin.beta[1] = -0.5;
    EXPECT_EQ(recommend_treatment(lin, x, 1, groups), 1);
    lin.beta[1] = 0.0;
    EXPECT_EQ(recommend_treatment(lin, x, 1, groups), 0);
}

TEST(Recommend, LinearPartitionIsTreatmentSplit) {
    Rng rng(84);
    const auto ds = treated_dataset(rng, 200, 3);
    for (double beta_t : {0.8, -0.6}) {
        LinearCoxModel lin;
        lin.beta = Vector{{0.4, -0.3, 0.2, beta_t}};
        const auto report = evaluate_recommendations(ds, lin, 3);
        const auto [lo, hi] = std::minmax_element(report.rec_values.begin(), report.rec_values.end());
        EXPECT_LT(*hi - *lo, 1e-12);
        const int preferred = beta_t > 0 ? 0 : 1;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            EXPECT_EQ(report.recommended[i], preferred);
            EXPECT_EQ(report.follows[i], (*ds.treatments())[i] == preferred);
        }
    }
}

TEST(Recommend, ReportConsistency) {
    Rng rng(85);
    const auto ds = treated_dataset(rng, 300, 2);
    const RiskModel net = treatment_network(4);
    const auto report = evaluate_recommendations(ds, net, 2);
    EXPECT_EQ(report.recommendation_size() + report.anti_recommendation_size(), ds.size());
    EXPECT_EQ(report.group_risks.rows(), Eigen::Index(ds.size()));
    EXPECT_EQ(report.group_risks.cols(), 2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto k = Eigen::Index(i);
        EXPECT_NEAR(report.rec_values[i], report.group_risks(k, 1) - report.group_risks(k, 0), 1e-12);
        EXPECT_EQ(report.follows[i], report.recommended[i] == report.assigned[i]);
    }
    EXPECT_GE(report.log_rank.p_value, 0.0);
    EXPECT_LE(report.log_rank.p_value, 1.0);
}

TEST(Recommend, DegeneratePartitions) {
    // h(x0, t) = relu(x0 + t - 1) - relu(t - x0 - 1): patients with x0 = 1 are
    // recommended group 0 and patients with x0 = -1 group 1.
    NetworkConfig cfg;
    cfg.nodes_per_layer = 2;
    const RiskNetwork net(cfg, {DenseLayer{Matrix{{1.0, 1.0}, {-1.0, 1.0}}, Vector{{-1.0, -1.0}}},
                                DenseLayer{Matrix{{1.0, -1.0}}, Vector::Zero(1)}});
    const std::size_t n = 10;
    Matrix x(Eigen::Index(n), 2);
    std::vector<int> follow(n), defy(n);
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = i % 2 == 0;
        x(Eigen::Index(i), 0) = positive ? 1.0 : -1.0;
        follow[i] = positive ? 0 : 1;
        defy[i] = 1 - follow[i];
        times[i] = 1.0 + double(i);
    }
    const std::vector<int> events(n, 1);
    const auto with_arms = [&](const std::vector<int>& arms) {
        Matrix xa = x;
        for (std::size_t i = 0; i < n; ++i) xa(Eigen::Index(i), 1) = arms[i];
        return SurvivalDataset(xa, Eigen::Map<const Vector>(times.data(), Eigen::Index(n)), events, arms);
    };
    try {
        evaluate_recommendations(with_arms(follow), net, 1);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "Anti-Recommendation subset is empty");
    }
    try {
        evaluate_recommendations(with_arms(defy), net, 1);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "Recommendation subset is empty");
    }
    auto mixed = follow;
    mixed[0] = 1;
    const auto report = evaluate_recommendations(with_arms(mixed), net, 1);
    EXPECT_EQ(report.anti_recommendation_size(), 1u);
    EXPECT_THROW(evaluate_recommendations(with_arms(std::vector<int>(n, 0)), net, 1), std::invalid_argument);
}
