#include "deepcox/errors.hpp"
#include "deepcox/metrics.hpp"
#include "deepcox/optim.hpp"
#include "deepcox/simulate.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace deepcox;

TEST(Schedule, InverseTimeDecay) {
    EXPECT_DOUBLE_EQ(lr_at_epoch(0.3, 0, 0.5), 0.3);
    EXPECT_NEAR(lr_at_epoch(0.1, 9, 0.1), 0.1 / 1.9, 1e-15);
    EXPECT_NEAR(lr_at_epoch(0.1, 9, 0.1), 0.052632, 1e-6);
    for (int e : {0, 1, 50, 1000}) EXPECT_EQ(lr_at_epoch(0.02, e, 0.0), 0.02);
    EXPECT_THROW(lr_at_epoch(0.1, -1, 0.1), std::invalid_argument);
}

TEST(Clipping, NormAndDirection) {
    Rng rng(61);
    for (int trial = 0; trial < 100; ++trial) {
        Vector g = testkit::random_matrix(rng, 1 + Eigen::Index(rng.index(20)), 1, 10.0).col(0);
        const Vector before = g;
        const double max_norm = rng.uniform(0.01, 20.0);
        clip_gradient(g, max_norm);
        EXPECT_LE(g.norm(), std::max(max_norm, before.norm()) * (1.0 + 1e-12));
        EXPECT_LE(g.norm(), before.norm() * (1.0 + 1e-12));
        EXPECT_LE(g.norm(), max_norm * (1.0 + 1e-12));
        if (before.norm() > 0) EXPECT_NEAR(g.normalized().dot(before.normalized()), 1.0, 1e-12);
    }
}

TEST(OptimizerStep, NesterovWithoutMomentumIsGradientDescent) {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd;
    cfg.momentum = 0.0;
    Optimizer opt(cfg, 5);
    Rng rng(62);
    Vector p = testkit::random_matrix(rng, 5, 1).col(0);
    Vector q = p;
    for (int step = 0; step < 50; ++step) {
        const Vector g = testkit::random_matrix(rng, 5, 1).col(0);
        const double lr = lr_at_epoch(0.1, step, 0.01);
        opt.step(p, g, lr);
        q -= lr * g;
        EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(OptimizerStep, NesterovHandValues) {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd;
    cfg.momentum = 0.5;
    Optimizer opt(cfg, 1);
    Vector p = Vector::Zero(1);
    opt.step(p, Vector::Ones(1), 1.0);  // v = -1, p = 0.5*(-1) - 1
    EXPECT_DOUBLE_EQ(p[0], -1.5);
    opt.step(p, Vector::Ones(1), 1.0);  // v = -1.5, p += 0.5*(-1.5) - 1
    EXPECT_DOUBLE_EQ(p[0], -3.25);
}

TEST(OptimizerStep, AdamZeroGradientLeavesParameters) {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::adam;
    Optimizer opt(cfg, 4);
    Vector p{{1.0, -2.0, 3.0, 0.5}};
    const Vector before = p;
    for (int k = 0; k < 10; ++k) opt.step(p, Vector::Zero(4), 0.1);
    EXPECT_EQ(p, before);
}

TEST(OptimizerStep, AdamFirstStepHasLearningRateMagnitude) {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::adam;
    Optimizer opt(cfg, 2);
    Vector p = Vector::Zero(2);
    opt.step(p, Vector{{3.0, -0.2}}, 0.01);
    EXPECT_NEAR(p[0], -0.01, 1e-8);
    EXPECT_NEAR(p[1], 0.01, 1e-7);
}

TEST(Train, LossNonIncreasingOnConvexProblem) {
    Rng rng(63);
    const std::size_t n = 20;
    Matrix x = testkit::random_matrix(rng, Eigen::Index(n), 2);
    std::vector<double> t(n);
    std::vector<int> e(n, 1);
    for (std::size_t i = 0; i < n; ++i) t[i] = rng.exponential(1.0) / std::exp(x(Eigen::Index(i), 0)) + 1e-6;
    const auto ds = testkit::make_dataset(x, t, e);
    NetworkConfig net;
    net.hidden_layers = 1;
    net.nodes_per_layer = 1;
    OptimizerConfig opt;
    opt.kind = OptimizerKind::sgd;
    opt.momentum = 0.0;
    opt.learning_rate = 1e-3;
    opt.epochs = 200;
    opt.seed = 3;
    // A one-unit network whose hidden unit stays in its linear region is a linear model.
    auto init = init_network(net, 2, 1);
    init.layers()[0].bias[0] = 50.0;
    const auto result = train(init, ds, nullptr, opt);
    const auto& loss = result.history.train_loss;
    ASSERT_EQ(loss.size(), 200u);
    for (std::size_t k = 11; k < loss.size(); ++k) EXPECT_LE(loss[k], loss[k - 1] + 1e-6);
    EXPECT_TRUE(result.history.validation_c_index.empty());
}

TEST(Train, SimLinearValidation) {
    SimulationSpec spec;
    spec.n = 2000;
    spec.seed = 64;
    const auto sim = generate(spec);
    const auto s = split(sim.dataset, {0.6, 0.2, 0.2}, 1);
    NetworkConfig net{1, 4, Activation::selu, 0.3752001953125, 1.9989501953124997};
    OptimizerConfig opt;
    opt.kind = OptimizerKind::sgd;
    opt.learning_rate = 3e-5;
    opt.lr_decay_rate = 3.57880859375e-4;
    opt.momentum = 0.9064692382812499;
    opt.epochs = 500;
    opt.seed = 2;
    const auto result = train(s.train, &s.validation, net, opt);
    ASSERT_EQ(result.history.validation_c_index.size(), 500u);
    EXPECT_GT(result.history.validation_c_index.back(), 0.70);
}

TEST(Train, Deterministic) {
    Rng rng(65);
    const auto ds = testkit::random_dataset(rng, 60, 3);
    NetworkConfig net{2, 5, Activation::relu, 0.3, 0.1};
    OptimizerConfig opt;
    opt.epochs = 30;
    opt.seed = 12;
    opt.batch_size = 16;
    const auto a = train(ds, &ds, net, opt);
    const auto b = train(ds, &ds, net, opt);
    EXPECT_EQ(a.network.parameters(), b.network.parameters());
    EXPECT_EQ(a.history.train_loss, b.history.train_loss);
}

TEST(Train, ClipBoundsFirstStep) {
    Rng rng(66);
    const auto ds = testkit::random_dataset(rng, 40, 3);
    NetworkConfig net{1, 6, Activation::selu, 0.0, 0.0};
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
        OptimizerConfig opt;
        opt.kind = kind;
        opt.learning_rate = 0.5;
        opt.epochs = 1;
        opt.seed = 7;
        opt.clip_norm = 1e-12;
        const auto init = init_network(net, 3, derive_seed(opt.seed, 0));
        const auto result = train(ds, nullptr, net, opt);
        const double moved = (result.network.parameters() - init.parameters()).norm();
        if (kind == OptimizerKind::sgd) {
            // Nesterov applies the clipped gradient through both v and the lookahead term.
            EXPECT_LE(moved, opt.learning_rate * (1.0 + opt.momentum) * 1e-12 * (1.0 + 1e-9));
        }
        EXPECT_GT(moved, 0.0);
    }
}

TEST(Train, DivergenceNamesEpoch) {
    Rng rng(67);
    const auto ds = testkit::random_dataset(rng, 50, 3);
    NetworkConfig net{1, 8, Activation::relu, 0.0, 0.0};
    OptimizerConfig opt;
    opt.kind = OptimizerKind::sgd;
    opt.learning_rate = 1e200;
    opt.epochs = 50;
    try {
        train(ds, nullptr, net, opt);
        FAIL() << "expected divergence";
    } catch (const TrainingDivergedError& e) {
        EXPECT_GE(e.epoch(), 0);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(Train, Preconditions) {
    Matrix x = Matrix::Ones(3, 2);
    const auto no_events = testkit::make_dataset(x, {1, 2, 3}, {0, 0, 0});
    EXPECT_THROW(train(no_events, nullptr, NetworkConfig{}, OptimizerConfig{}), NoEventsError);
    OptimizerConfig bad;
    bad.epochs = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(KFold, Sizes) {
    for (const auto& fold : kfold(9, 3, 1)) EXPECT_EQ(fold.holdout.size(), 3u);
    std::multiset<std::size_t> sizes;
    for (const auto& fold : kfold(10, 3, 1)) sizes.insert(fold.holdout.size());
    EXPECT_EQ(sizes, (std::multiset<std::size_t>{3, 3, 4}));
    EXPECT_THROW(kfold(2, 3, 1), std::invalid_argument);
    EXPECT_THROW(kfold(10, 1, 1), std::invalid_argument);
}

TEST(KFold, PartitionProperty) {
    Rng rng(68);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + int(rng.index(6));
        const std::size_t n = std::size_t(k) + rng.index(100);
        const auto folds = kfold(n, k, rng.next_u64());
        std::vector<std::size_t> all;
        std::size_t lo = n, hi = 0;
        for (const auto& f : folds) {
            all.insert(all.end(), f.holdout.begin(), f.holdout.end());
            EXPECT_EQ(f.train.size() + f.holdout.size(), n);
            std::set<std::size_t> tr(f.train.begin(), f.train.end());
            for (auto i : f.holdout) EXPECT_EQ(tr.count(i), 0u);
            lo = std::min(lo, f.holdout.size());
            hi = std::max(hi, f.holdout.size());
        }
        EXPECT_LE(hi - lo, 1u);
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> expected(n);
        std::iota(expected.begin(), expected.end(), 0);
        EXPECT_EQ(all, expected);
    }
}

namespace {

SurvivalDataset search_data() {
    SimulationSpec spec;
    spec.n = 300;
    spec.seed = 69;
    return generate(spec).dataset;
}

} // namespace

TEST(Search, SingleTrial) {
    OptimizerConfig base;
    base.epochs = 5;
    const auto r = random_search(SearchSpace{}, search_data(), 3, 1, 4, base);
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_EQ(r.best_index, 0);
    EXPECT_EQ(r.best().fold_c_index.size(), 3u);
    EXPECT_THROW(random_search(SearchSpace{}, search_data(), 3, 0, 4, base), std::invalid_argument);
}

TEST(Search, DivergentTrialLoses) {
    NetworkConfig net{1, 4, Activation::relu, 0.0, 0.0};
    OptimizerConfig sane;
    sane.kind = OptimizerKind::sgd;
    sane.learning_rate = 1e-4;
    sane.epochs = 20;
    OptimizerConfig wild = sane;
    wild.learning_rate = 1e200;
    const auto r = evaluate_configurations({{net, wild}, {net, sane}}, search_data(), 3, 5);
    EXPECT_TRUE(r.trials[0].diverged);
    EXPECT_EQ(r.trials[0].mean_c_index, 0.0);
    EXPECT_FALSE(r.trials[1].diverged);
    EXPECT_EQ(r.best_index, 1);
}

TEST(Search, TiesGoToEarlierTrial) {
    NetworkConfig net{1, 4, Activation::relu, 0.0, 0.0};
    OptimizerConfig opt;
    opt.epochs = 5;
    const auto r = evaluate_configurations({{net, opt}, {net, opt}, {net, opt}}, search_data(), 3, 5);
    EXPECT_EQ(r.trials[0].mean_c_index, r.trials[2].mean_c_index);
    EXPECT_EQ(r.best_index, 0);
}

TEST(Search, DeterministicAcrossThreadCounts) {
    OptimizerConfig base;
    base.epochs = 5;
    const auto ds = search_data();
    const auto a = random_search(SearchSpace{}, ds, 3, 6, 11, base, 1);
    const auto b = random_search(SearchSpace{}, ds, 3, 6, 11, base, 3);
    ASSERT_EQ(a.trials.size(), b.trials.size());
    EXPECT_EQ(a.best_index, b.best_index);
    for (std::size_t t = 0; t < a.trials.size(); ++t) {
        EXPECT_EQ(a.trials[t].fold_c_index, b.trials[t].fold_c_index);
        EXPECT_EQ(a.trials[t].network.nodes_per_layer, b.trials[t].network.nodes_per_layer);
        EXPECT_EQ(a.trials[t].optimizer.learning_rate, b.trials[t].optimizer.learning_rate);
    }
}

TEST(Search, SamplesInsideRanges) {
    SearchSpace space;
    Rng rng(70);
    for (int k = 0; k < 500; ++k) {
        const auto [net, opt] = sample_configuration(space, OptimizerConfig{}, rng);
        EXPECT_GE(net.hidden_layers, 1);
        EXPECT_LE(net.hidden_layers, 3);
        EXPECT_GE(net.nodes_per_layer, 4);
        EXPECT_LE(net.nodes_per_layer, 64);
        EXPECT_GE(net.dropout_rate, 0.0);
        EXPECT_LE(net.dropout_rate, 0.7);
        EXPECT_GE(opt.learning_rate, 1e-5);
        EXPECT_LE(opt.learning_rate, 1e-1);
        EXPECT_GE(opt.momentum, 0.8);
        EXPECT_LE(opt.momentum, 0.95);
    }
    space.l2 = {2.0, 1.0};
    EXPECT_THROW(space.validate(), std::invalid_argument);
}
