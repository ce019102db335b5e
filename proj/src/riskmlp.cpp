#include "deepcox/riskmlp.hpp"

#include "deepcox/errors.hpp"
#include "deepcox/random.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace deepcox {

std::string to_string(Activation activation) {
    return activation == Activation::relu ? "relu" : "selu";
}

Activation activation_from_string(const std::string& name) {
    if (name == "relu" || name == "ReLU") return Activation::relu;
    if (name == "selu" || name == "SELU") return Activation::selu;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

void NetworkConfig::validate() const {
    if (hidden_layers < 1) throw std::invalid_argument("network needs at least one hidden layer");
    if (nodes_per_layer < 1) throw std::invalid_argument("network needs at least one node per layer");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
    if (!(l2_coefficient >= 0.0)) throw std::invalid_argument("l2 coefficient must be non-negative");
}

RiskNetwork::RiskNetwork(NetworkConfig config, std::vector<DenseLayer> layers)
    : config_(config), layers_(std::move(layers)) {
    config_.validate();
    if (layers_.size() != static_cast<std::size_t>(config_.hidden_layers) + 1) {
        throw std::invalid_argument("layer count does not match the configuration");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        const Eigen::Index expected_out = l + 1 == layers_.size() ? 1 : config_.nodes_per_layer;
        if (layer.weights.rows() != expected_out || layer.bias.size() != expected_out) {
            throw std::invalid_argument("layer " + std::to_string(l) + " has the wrong output width");
        }
        if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
            throw std::invalid_argument("layer " + std::to_string(l) + " does not chain to its predecessor");
        }
        if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
            throw std::invalid_argument("network parameters must be finite");
        }
    }
    if (layers_.front().weights.cols() < 1) throw std::invalid_argument("network needs a positive input width");
}

Eigen::Index RiskNetwork::num_parameters() const {
    Eigen::Index total = 0;
    for (const auto& layer : layers_) total += layer.weights.size() + layer.bias.size();
    return total;
}

namespace {

Vector flatten(const std::vector<DenseLayer>& layers) {
    Eigen::Index total = 0;
    for (const auto& layer : layers) total += layer.weights.size() + layer.bias.size();
    Vector flat(total);
    Eigen::Index at = 0;
    for (const auto& layer : layers) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            flat.segment(at, layer.weights.cols()) = layer.weights.row(r).transpose();
            at += layer.weights.cols();
        }
        flat.segment(at, layer.bias.size()) = layer.bias;
        at += layer.bias.size();
    }
    return flat;
}

} // namespace

Vector RiskNetwork::parameters() const { return flatten(layers_); }

void RiskNetwork::set_parameters(const Vector& flat) {
    if (flat.size() != num_parameters()) throw std::invalid_argument("parameter vector has the wrong length");
    Eigen::Index at = 0;
    for (auto& layer : layers_) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            layer.weights.row(r) = flat.segment(at, layer.weights.cols()).transpose();
            at += layer.weights.cols();
        }
        layer.bias = flat.segment(at, layer.bias.size());
        at += layer.bias.size();
    }
}

double RiskNetwork::weight_penalty() const {
    double total = 0.0;
    for (const auto& layer : layers_) total += layer.weights.squaredNorm();
    return total;
}

Vector LossGradients::flat() const { return flatten(layers); }

RiskNetwork init_network(const NetworkConfig& config, Eigen::Index input_width, std::uint64_t seed) {
    config.validate();
    if (input_width < 1) throw std::invalid_argument("network needs a positive input width");
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    Eigen::Index fan_in = input_width;
    for (int l = 0; l <= config.hidden_layers; ++l) {
        const Eigen::Index fan_out = l == config.hidden_layers ? 1 : config.nodes_per_layer;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
        for (Eigen::Index r = 0; r < fan_out; ++r) {
            for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
        }
        layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return RiskNetwork(config, std::move(layers));
}

double activate(Activation activation, double z) {
    if (activation == Activation::relu) return z > 0.0 ? z : 0.0;
    return z > 0.0 ? kSeluScale * z : kSeluScale * kSeluAlpha * std::expm1(z);
}

double activate_derivative(Activation activation, double z) {
    if (activation == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    return z > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(z);
}

Vector forward(const RiskNetwork& net, const Matrix& x, Mode mode, std::uint64_t dropout_seed,
               ForwardCache* cache) {
    if (x.cols() != net.input_width()) {
        throw std::invalid_argument("input has " + std::to_string(x.cols()) + " columns, network expects " +
                                    std::to_string(net.input_width()));
    }
    const auto& cfg = net.config();
    const auto& layers = net.layers();
    const bool drop = mode == Mode::train && cfg.dropout_rate > 0.0;
    Rng rng(dropout_seed);
    if (cache) *cache = ForwardCache{};

    Matrix a = x;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        Matrix z = a * layers[l].weights.transpose();
        z.rowwise() += layers[l].bias.transpose();
        Matrix h = z.unaryExpr([&](double v) { return activate(cfg.activation, v); });
        Matrix mask;
        if (drop) {
            const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
            mask.resize(h.rows(), h.cols());
            for (Eigen::Index i = 0; i < mask.size(); ++i) {
                mask.data()[i] = rng.uniform() < cfg.dropout_rate ? 0.0 : keep_scale;
            }
            h.array() *= mask.array();
        }
        if (cache) {
            cache->inputs.push_back(std::move(a));
            cache->pre_activations.push_back(std::move(z));
            cache->masks.push_back(std::move(mask));
        }
        a = std::move(h);
    }
    const auto& out = layers.back();
    Vector risks = a * out.weights.transpose();
    risks.array() += out.bias[0];
    if (cache) cache->inputs.push_back(std::move(a));
    return risks;
}

// ---------------------------------------------------------------------------
// Loss

namespace {

double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

void check_loss_inputs(const Vector& risks, std::span<const int> events, const SortedSurvivalView& view) {
    if (static_cast<std::size_t>(risks.size()) != events.size() || view.size() != events.size()) {
        throw std::invalid_argument("risks, events and view disagree on patient count");
    }
}

/// log of the risk-set denominator at every tie group (risk sets grow with
/// the group index since the view is ordered by descending time).
std::vector<double> group_log_denominators(const Vector& risks, const SortedSurvivalView& view) {
    std::vector<double> lse(view.tie_groups.size());
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < view.tie_groups.size(); ++g) {
        for (std::size_t k = view.tie_groups[g].begin; k < view.tie_groups[g].end; ++k) {
            running = log_add_exp(running, risks[static_cast<Eigen::Index>(view.permutation[k])]);
        }
        lse[g] = running;
    }
    return lse;
}

} // namespace

double cox_loss(const Vector& risks, std::span<const int> events, const SortedSurvivalView& view) {
    check_loss_inputs(risks, events, view);
    const auto lse = group_log_denominators(risks, view);
    double loss = 0.0;
    bool any_event = false;
    for (std::size_t k = 0; k < view.size(); ++k) {
        const auto i = view.permutation[k];
        if (events[i] != 1) continue;
        any_event = true;
        loss -= risks[static_cast<Eigen::Index>(i)] - lse[view.group_of[k]];
    }
    if (!any_event) throw NoEventsError("batch has no observed events");
    return loss;
}

double cox_loss(const Vector& risks, const SurvivalDataset& ds, const SortedSurvivalView& view) {
    return cox_loss(risks, ds.events(), view);
}

double cox_loss(const Vector& risks, const SurvivalDataset& ds, const SortedSurvivalView& view,
                double l2_coefficient, const RiskNetwork& net) {
    return cox_loss(risks, ds.events(), view) + l2_coefficient * net.weight_penalty();
}

Vector cox_loss_grad(const Vector& risks, std::span<const int> events, const SortedSurvivalView& view) {
    check_loss_inputs(risks, events, view);
    const auto lse = group_log_denominators(risks, view);
    const std::size_t groups = view.tie_groups.size();

    std::vector<int> deaths(groups, 0);
    for (std::size_t k = 0; k < view.size(); ++k) {
        if (events[view.permutation[k]] == 1) ++deaths[view.group_of[k]];
    }

    // log of sum over groups g' >= g of deaths_g' / denominator_g'; these are
    // exactly the event times at or before the times in group g.
    std::vector<double> log_tail(groups + 1, -std::numeric_limits<double>::infinity());
    for (std::size_t g = groups; g-- > 0;) {
        const double term = deaths[g] > 0 ? std::log(static_cast<double>(deaths[g])) - lse[g]
                                          : -std::numeric_limits<double>::infinity();
        log_tail[g] = log_add_exp(log_tail[g + 1], term);
    }
    if (log_tail[0] == -std::numeric_limits<double>::infinity()) {
        throw NoEventsError("batch has no observed events");
    }

    Vector grad(risks.size());
    for (std::size_t k = 0; k < view.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(view.permutation[k]);
        const double lt = log_tail[view.group_of[k]];
        const double share = lt == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(risks[i] + lt);
        grad[i] = share - (events[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0);
    }
    return grad;
}

Vector cox_loss_grad(const Vector& risks, const SurvivalDataset& ds, const SortedSurvivalView& view) {
    return cox_loss_grad(risks, ds.events(), view);
}

// ---------------------------------------------------------------------------

LossGradients backward(const RiskNetwork& net, const ForwardCache& cache, const Vector& d_risk) {
    const auto& layers = net.layers();
    const std::size_t hidden = layers.size() - 1;
    if (cache.inputs.size() != layers.size() || cache.pre_activations.size() != hidden ||
        cache.masks.size() != hidden) {
        throw std::logic_error("forward cache does not belong to this network");
    }
    if (d_risk.size() != cache.inputs.back().rows()) {
        throw std::logic_error("d_risk length does not match the cached batch");
    }
    const auto& cfg = net.config();
    const double decay = 2.0 * cfg.l2_coefficient;

    LossGradients grads;
    grads.d_risk = d_risk;
    grads.layers.resize(layers.size());

    Matrix upstream = d_risk;  // n x 1, gradient w.r.t. the current layer's output
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Matrix& input = cache.inputs[l];
        auto& g = grads.layers[l];
        g.weights = upstream.transpose() * input + decay * layers[l].weights;
        g.bias = upstream.colwise().sum().transpose();
        if (l == 0) break;
        Matrix d_input = upstream * layers[l].weights;
        const auto& mask = cache.masks[l - 1];
        if (mask.size() > 0) d_input.array() *= mask.array();
        const Matrix& z = cache.pre_activations[l - 1];
        upstream = d_input.array() *
                   z.unaryExpr([&](double v) { return activate_derivative(cfg.activation, v); }).array();
    }
    return grads;
}

} // namespace deepcox
