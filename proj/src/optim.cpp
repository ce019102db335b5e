#include "deepcox/optim.hpp"

#include "deepcox/errors.hpp"
#include "deepcox/metrics.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace deepcox {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer '" + name + "'");
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(lr_decay_rate >= 0.0)) throw std::invalid_argument("lr decay must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("adam betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
    if (clip_norm && !(*clip_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (batch_size < 0) throw std::invalid_argument("batch size must be non-negative");
}

double lr_at_epoch(double lr0, int epoch, double decay_rate) {
    if (epoch < 0) throw std::invalid_argument("epoch must be non-negative");
    return lr0 / (1.0 + static_cast<double>(epoch) * decay_rate);
}

double clip_gradient(Vector& grad, double max_norm) {
    const double norm = grad.norm();
    if (norm > max_norm) grad *= max_norm / norm;
    return norm;
}

Optimizer::Optimizer(const OptimizerConfig& config, Eigen::Index num_parameters)
    : config_(config), velocity_(Vector::Zero(num_parameters)), second_(Vector::Zero(num_parameters)) {}

void Optimizer::step(Vector& params, const Vector& grad, double learning_rate) {
    if (grad.size() != params.size() || params.size() != velocity_.size()) {
        throw std::invalid_argument("optimizer state does not match the parameter count");
    }
    if (config_.kind == OptimizerKind::sgd) {
        // Nesterov momentum in the form p += mu * v - lr * g after v = mu * v - lr * g.
        const double mu = config_.momentum;
        velocity_ = mu * velocity_ - learning_rate * grad;
        params += mu * velocity_ - learning_rate * grad;
        return;
    }
    ++steps_;
    const double b1 = config_.adam_beta1;
    const double b2 = config_.adam_beta2;
    velocity_ = b1 * velocity_ + (1.0 - b1) * grad;
    second_ = b2 * second_ + (1.0 - b2) * grad.cwiseAbs2();
    const double t = static_cast<double>(steps_);
    const double lr_t = learning_rate * std::sqrt(1.0 - std::pow(b2, t)) / (1.0 - std::pow(b1, t));
    params.array() -= lr_t * velocity_.array() / (second_.array().sqrt() + config_.adam_epsilon);
}

// ---------------------------------------------------------------------------

namespace {

struct Batch {
    Matrix x;
    std::vector<int> events;
    SortedSurvivalView view;
};

Batch make_batch(const SurvivalDataset& ds, const std::vector<std::size_t>& rows) {
    Batch batch;
    batch.x.resize(static_cast<Eigen::Index>(rows.size()), ds.covariates().cols());
    Vector times(static_cast<Eigen::Index>(rows.size()));
    batch.events.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(rows[k]);
        batch.x.row(static_cast<Eigen::Index>(k)) = ds.covariates().row(i);
        times[static_cast<Eigen::Index>(k)] = ds.times()[i];
        batch.events[k] = ds.events()[rows[k]];
    }
    batch.view = sort_view(times);
    return batch;
}

double validation_c_index(const RiskNetwork& net, const SurvivalDataset& val) {
    const Vector risks = forward(net, val.covariates(), Mode::infer);
    if (!risks.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    const auto counts = concordance_counts(std::span<const double>(val.times().data(), val.size()), val.events(),
                                           std::span<const double>(risks.data(), val.size()));
    return counts.comparable == 0 ? std::numeric_limits<double>::quiet_NaN() : counts.value();
}

} // namespace

TrainResult train(RiskNetwork network, const SurvivalDataset& train_ds, const SurvivalDataset* validation,
                  const OptimizerConfig& opt_config) {
    opt_config.validate();
    if (train_ds.num_events() == 0) throw NoEventsError("training set has no observed events");
    if (train_ds.covariates().cols() != network.input_width()) {
        throw std::invalid_argument("training covariates do not match the network input width");
    }

    const std::size_t n = train_ds.size();
    const bool full_batch = opt_config.batch_size == 0 || static_cast<std::size_t>(opt_config.batch_size) >= n;
    const auto full_view = sort_view(train_ds);
    Rng batch_rng(derive_seed(opt_config.seed, 1));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Optimizer optimizer(opt_config, network.num_parameters());
    Vector params = network.parameters();
    TrainingHistory history;
    ForwardCache cache;
    const double l2 = network.config().l2_coefficient;
    std::uint64_t pass = 0;

    auto step_on = [&](const Matrix& x, std::span<const int> events, const SortedSurvivalView& view,
                       double lr, int epoch) {
        const Vector risks = forward(network, x, Mode::train, derive_seed(opt_config.seed, 1000 + pass++), &cache);
        const double loss = cox_loss(risks, events, view) + l2 * network.weight_penalty();
        if (!std::isfinite(loss)) throw TrainingDivergedError(epoch, "non-finite training loss");
        const Vector d_risk = cox_loss_grad(risks, events, view);
        Vector grad = backward(network, cache, d_risk).flat();
        if (!grad.allFinite()) throw TrainingDivergedError(epoch, "non-finite gradient");
        if (opt_config.clip_norm) clip_gradient(grad, *opt_config.clip_norm);
        optimizer.step(params, grad, lr);
        if (!params.allFinite()) throw TrainingDivergedError(epoch, "non-finite parameters");
        network.set_parameters(params);
        return loss;
    };

    for (int epoch = 0; epoch < opt_config.epochs; ++epoch) {
        const double lr = lr_at_epoch(opt_config.learning_rate, epoch, opt_config.lr_decay_rate);
        double epoch_loss = 0.0;
        if (full_batch) {
            epoch_loss = step_on(train_ds.covariates(), train_ds.events(), full_view, lr, epoch);
        } else {
            batch_rng.shuffle(order);
            const auto size = static_cast<std::size_t>(opt_config.batch_size);
            for (std::size_t begin = 0; begin < n; begin += size) {
                const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                                    order.begin() + static_cast<std::ptrdiff_t>(std::min(n, begin + size)));
                const auto batch = make_batch(train_ds, rows);
                const bool has_event =
                    std::find(batch.events.begin(), batch.events.end(), 1) != batch.events.end();
                if (!has_event) continue;
                epoch_loss += step_on(batch.x, batch.events, batch.view, lr, epoch);
            }
        }
        history.train_loss.push_back(epoch_loss);
        if (validation) history.validation_c_index.push_back(validation_c_index(network, *validation));
    }
    return TrainResult{std::move(network), std::move(history)};
}

TrainResult train(const SurvivalDataset& train_ds, const SurvivalDataset* validation,
                  const NetworkConfig& net_config, const OptimizerConfig& opt_config) {
    auto network = init_network(net_config, train_ds.covariates().cols(), derive_seed(opt_config.seed, 0));
    return train(std::move(network), train_ds, validation, opt_config);
}

// ---------------------------------------------------------------------------

std::vector<Fold> kfold(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("k-fold needs k >= 2");
    const auto folds = static_cast<std::size_t>(k);
    if (n < folds) throw std::invalid_argument("k-fold needs at least k patients");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<Fold> out(folds);
    std::size_t begin = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
        out[f].holdout.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                              order.begin() + static_cast<std::ptrdiff_t>(begin + size));
        begin += size;
    }
    for (std::size_t f = 0; f < folds; ++f) {
        for (std::size_t g = 0; g < folds; ++g) {
            if (g != f) out[f].train.insert(out[f].train.end(), out[g].holdout.begin(), out[g].holdout.end());
        }
        std::sort(out[f].train.begin(), out[f].train.end());
        std::sort(out[f].holdout.begin(), out[f].holdout.end());
    }
    return out;
}

void SearchSpace::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("search range for ") + what + " is empty");
    };
    check(hidden_layers.low >= 1 && hidden_layers.low <= hidden_layers.high, "hidden_layers");
    check(nodes_per_layer.low >= 1 && nodes_per_layer.low <= nodes_per_layer.high, "nodes_per_layer");
    check(!activations.empty(), "activation");
    check(dropout.low >= 0.0 && dropout.low <= dropout.high && dropout.high < 1.0, "dropout");
    check(l2.low >= 0.0 && l2.low <= l2.high, "l2");
    check(learning_rate.low > 0.0 && learning_rate.low <= learning_rate.high, "learning_rate");
    check(lr_decay.low >= 0.0 && lr_decay.low <= lr_decay.high, "lr_decay");
    check(momentum.low >= 0.0 && momentum.low <= momentum.high && momentum.high < 1.0, "momentum");
}

std::pair<NetworkConfig, OptimizerConfig> sample_configuration(const SearchSpace& space,
                                                               const OptimizerConfig& base, Rng& rng) {
    NetworkConfig net;
    net.hidden_layers = rng.integer(space.hidden_layers.low, space.hidden_layers.high);
    net.nodes_per_layer = rng.integer(space.nodes_per_layer.low, space.nodes_per_layer.high);
    net.activation = space.activations[rng.index(space.activations.size())];
    net.dropout_rate = rng.uniform(space.dropout.low, space.dropout.high);
    net.l2_coefficient = rng.uniform(space.l2.low, space.l2.high);
    OptimizerConfig opt = base;
    opt.learning_rate =
        std::exp(rng.uniform(std::log(space.learning_rate.low), std::log(space.learning_rate.high)));
    opt.lr_decay_rate = rng.uniform(space.lr_decay.low, space.lr_decay.high);
    opt.momentum = rng.uniform(space.momentum.low, space.momentum.high);
    return {net, opt};
}

namespace {

void score_trial(SearchTrial& trial, const SurvivalDataset& ds, const std::vector<Fold>& folds) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto fold_train = ds.subset(folds[f].train);
        const auto holdout = ds.subset(folds[f].holdout);
        auto opt = trial.optimizer;
        opt.seed = derive_seed(trial.optimizer.seed, 100 + f);
        double score = 0.0;
        try {
            const auto result = train(fold_train, nullptr, trial.network, opt);
            const double c = validation_c_index(result.network, holdout);
            score = std::isfinite(c) ? c : 0.0;
        } catch (const TrainingDivergedError&) {
            trial.diverged = true;
        } catch (const NoEventsError&) {
        }
        trial.fold_c_index.push_back(score);
        total += score;
    }
    trial.mean_c_index = total / static_cast<double>(folds.size());
}

SearchResult run_trials(std::vector<SearchTrial> trials, const SurvivalDataset& ds, int k, std::uint64_t seed,
                        int threads) {
    const auto folds = kfold(ds.size(), k, derive_seed(seed, 7));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < trials.size();) score_trial(trials[t], ds, folds);
    };
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, trials.size()); ++w) pool.emplace_back(worker);
    }

    SearchResult result;
    result.trials = std::move(trials);
    for (std::size_t t = 1; t < result.trials.size(); ++t) {
        if (result.trials[t].mean_c_index > result.best().mean_c_index) result.best_index = static_cast<int>(t);
    }
    return result;
}

} // namespace

SearchResult random_search(const SearchSpace& space, const SurvivalDataset& ds, int k, int n_trials,
                           std::uint64_t seed, const OptimizerConfig& base, int threads) {
    if (n_trials < 1) throw std::invalid_argument("random search needs at least one trial");
    space.validate();
    base.validate();
    std::vector<SearchTrial> trials(static_cast<std::size_t>(n_trials));
    Rng rng(seed);
    for (int t = 0; t < n_trials; ++t) {
        auto& trial = trials[static_cast<std::size_t>(t)];
        trial.index = t;
        std::tie(trial.network, trial.optimizer) = sample_configuration(space, base, rng);
        trial.optimizer.seed = derive_seed(seed, 10'000 + static_cast<std::uint64_t>(t));
    }
    return run_trials(std::move(trials), ds, k, seed, threads);
}

SearchResult evaluate_configurations(const std::vector<std::pair<NetworkConfig, OptimizerConfig>>& configs,
                                     const SurvivalDataset& ds, int k, std::uint64_t seed, int threads) {
    if (configs.empty()) throw std::invalid_argument("random search needs at least one trial");
    std::vector<SearchTrial> trials(configs.size());
    for (std::size_t t = 0; t < configs.size(); ++t) {
        trials[t].index = static_cast<int>(t);
        trials[t].network = configs[t].first;
        trials[t].optimizer = configs[t].second;
        trials[t].optimizer.validate();
    }
    return run_trials(std::move(trials), ds, k, seed, threads);
}

} // namespace deepcox
