#pragma once

#include "deepcox/data.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deepcox {

enum class Activation { relu, selu };

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& name);

inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluScale = 1.0507009873554805;

struct NetworkConfig {
    int hidden_layers = 1;
    int nodes_per_layer = 4;
    Activation activation = Activation::relu;
    double dropout_rate = 0.0;
    double l2_coefficient = 0.0;

    void validate() const;
};

/// Affine map: weights are (outputs x inputs).
struct DenseLayer {
    Matrix weights;
    Vector bias;
};

/// Multi-layer perceptron ending in a single linear output node, the
/// estimated log-risk h(x).
class RiskNetwork {
public:
    RiskNetwork() = default;
    RiskNetwork(NetworkConfig config, std::vector<DenseLayer> layers);

    const NetworkConfig& config() const noexcept { return config_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    Eigen::Index input_width() const { return layers_.front().weights.cols(); }

    /// All weights then bias of each layer, in layer order, flattened row-major.
    Vector parameters() const;
    void set_parameters(const Vector& flat);
    Eigen::Index num_parameters() const;

    /// Sum of squared weights (biases excluded).
    double weight_penalty() const;

private:
    NetworkConfig config_;
    std::vector<DenseLayer> layers_;
};

/// Glorot-uniform weights, zero biases.
RiskNetwork init_network(const NetworkConfig& config, Eigen::Index input_width, std::uint64_t seed);

enum class Mode { train, infer };

/// Intermediate values kept by a forward pass for backpropagation.
struct ForwardCache {
    /// inputs[l] is what layer l consumed (n x in_l).
    std::vector<Matrix> inputs;
    /// Pre-activations of every hidden layer.
    std::vector<Matrix> pre_activations;
    /// Inverted-dropout multipliers per hidden layer; empty when inactive.
    std::vector<Matrix> masks;
};

double activate(Activation activation, double z);
double activate_derivative(Activation activation, double z);

/// Risk for every row of x. Dropout only acts in train mode.
Vector forward(const RiskNetwork& net, const Matrix& x, Mode mode = Mode::infer,
               std::uint64_t dropout_seed = 0, ForwardCache* cache = nullptr);

/// Negative log partial likelihood with Breslow ties, risk sets taken within
/// the given patients. Throws NoEventsError when no event is present.
double cox_loss(const Vector& risks, std::span<const int> events, const SortedSurvivalView& view);
double cox_loss(const Vector& risks, const SurvivalDataset& ds, const SortedSurvivalView& view);

/// Loss plus l2 * sum(W^2) of `net`.
double cox_loss(const Vector& risks, const SurvivalDataset& ds, const SortedSurvivalView& view,
                double l2_coefficient, const RiskNetwork& net);

/// d loss / d h_k for every patient, O(n) given the view.
Vector cox_loss_grad(const Vector& risks, std::span<const int> events, const SortedSurvivalView& view);
Vector cox_loss_grad(const Vector& risks, const SurvivalDataset& ds, const SortedSurvivalView& view);

struct LossGradients {
    Vector d_risk;
    /// Same shapes as the network layers.
    std::vector<DenseLayer> layers;

    Vector flat() const;
};

/// Backpropagates d_risk through the cached pass and adds 2 l2 W weight decay.
LossGradients backward(const RiskNetwork& net, const ForwardCache& cache, const Vector& d_risk);

} // namespace deepcox
