#pragma once

#include "deepcox/data.hpp"
#include "deepcox/random.hpp"
#include "deepcox/riskmlp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace deepcox {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double lr_decay_rate = 0.0;
    /// Nesterov momentum (sgd only).
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    /// Global L2 norm cap on the gradient.
    std::optional<double> clip_norm;
    int epochs = 100;
    /// 0 trains full-batch. Otherwise risk sets are formed within each
    /// mini-batch, a biased approximation of the full partial likelihood.
    int batch_size = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// lr0 / (1 + epoch * decay_rate).
double lr_at_epoch(double lr0, int epoch, double decay_rate);

/// Rescales `grad` onto the ball of radius `max_norm`; returns the original norm.
double clip_gradient(Vector& grad, double max_norm);

/// Stateful first-order update rule over a flat parameter vector.
class Optimizer {
public:
    Optimizer(const OptimizerConfig& config, Eigen::Index num_parameters);

    void step(Vector& params, const Vector& grad, double learning_rate);

private:
    OptimizerConfig config_;
    Vector velocity_;  // sgd momentum buffer, or adam first moment
    Vector second_;    // adam second moment
    long steps_ = 0;
};

struct TrainingHistory {
    std::vector<double> train_loss;
    /// Empty when no validation set was supplied.
    std::vector<double> validation_c_index;
};

struct TrainResult {
    RiskNetwork network;
    TrainingHistory history;
};

/// Gradient training of the negative log partial likelihood plus weight decay.
/// The dataset covariates are the network inputs. Throws
/// TrainingDivergedError when the loss turns non-finite.
TrainResult train(const SurvivalDataset& train_ds, const SurvivalDataset* validation,
                  const NetworkConfig& net_config, const OptimizerConfig& opt_config);

/// Same, continuing from an existing network.
TrainResult train(RiskNetwork network, const SurvivalDataset& train_ds, const SurvivalDataset* validation,
                  const OptimizerConfig& opt_config);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> holdout;
};

/// Seeded k-fold partition; holdout sizes differ by at most one.
std::vector<Fold> kfold(std::size_t n, int k, std::uint64_t seed);

struct IntRange {
    int low, high;
};
struct RealRange {
    double low, high;
};

struct SearchSpace {
    IntRange hidden_layers{1, 3};
    IntRange nodes_per_layer{4, 64};
    std::vector<Activation> activations{Activation::relu, Activation::selu};
    RealRange dropout{0.0, 0.7};
    RealRange l2{0.0, 20.0};
    /// Sampled log-uniformly.
    RealRange learning_rate{1e-5, 1e-1};
    RealRange lr_decay{1e-5, 1e-2};
    RealRange momentum{0.8, 0.95};

    void validate() const;
};

struct SearchTrial {
    int index = 0;
    NetworkConfig network;
    OptimizerConfig optimizer;
    std::vector<double> fold_c_index;
    double mean_c_index = 0.0;
    bool diverged = false;
};

struct SearchResult {
    int best_index = 0;
    std::vector<SearchTrial> trials;

    const SearchTrial& best() const { return trials[static_cast<std::size_t>(best_index)]; }
};

/// Draws one configuration; `base` supplies the optimizer kind, epochs and
/// every setting the space does not cover.
std::pair<NetworkConfig, OptimizerConfig> sample_configuration(const SearchSpace& space,
                                                               const OptimizerConfig& base, Rng& rng);

/// Scores each sampled configuration by mean k-fold holdout C-index and
/// returns the best, ties going to the earlier trial. Divergent folds score 0.
SearchResult random_search(const SearchSpace& space, const SurvivalDataset& ds, int k, int n_trials,
                           std::uint64_t seed, const OptimizerConfig& base, int threads = 1);

/// Scores explicitly listed configurations the same way (trial i uses configs[i]).
SearchResult evaluate_configurations(const std::vector<std::pair<NetworkConfig, OptimizerConfig>>& configs,
                                     const SurvivalDataset& ds, int k, std::uint64_t seed, int threads = 1);

} // namespace deepcox
