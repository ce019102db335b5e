#include "deepcox/serialization.hpp"

#include <cmath>
#include <stdexcept>

namespace deepcox {

Json number_or_null(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

} // namespace

Json to_json(const NetworkConfig& c) {
    return Json{{"hidden_layers", c.hidden_layers},
                {"nodes_per_layer", c.nodes_per_layer},
                {"activation", to_string(c.activation)},
                {"dropout", c.dropout_rate},
                {"l2", c.l2_coefficient}};
}

NetworkConfig network_config_from_json(const Json& j) {
    NetworkConfig c;
    c.hidden_layers = get_or(j, "hidden_layers", c.hidden_layers);
    c.nodes_per_layer = get_or(j, "nodes_per_layer", c.nodes_per_layer);
    c.activation = activation_from_string(get_or<std::string>(j, "activation", to_string(c.activation)));
    c.dropout_rate = get_or(j, "dropout", c.dropout_rate);
    c.l2_coefficient = get_or(j, "l2", c.l2_coefficient);
    c.validate();
    return c;
}

Json to_json(const OptimizerConfig& c) {
    return Json{{"kind", to_string(c.kind)},
                {"learning_rate", c.learning_rate},
                {"lr_decay", c.lr_decay_rate},
                {"momentum", c.momentum},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2},
                {"adam_epsilon", c.adam_epsilon},
                {"clip_norm", optional_number(c.clip_norm)},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"seed", c.seed}};
}

OptimizerConfig optimizer_config_from_json(const Json& j) {
    OptimizerConfig c;
    c.kind = optimizer_kind_from_string(get_or<std::string>(j, "kind", to_string(c.kind)));
    c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
    c.lr_decay_rate = get_or(j, "lr_decay", c.lr_decay_rate);
    c.momentum = get_or(j, "momentum", c.momentum);
    c.adam_beta1 = get_or(j, "adam_beta1", c.adam_beta1);
    c.adam_beta2 = get_or(j, "adam_beta2", c.adam_beta2);
    c.adam_epsilon = get_or(j, "adam_epsilon", c.adam_epsilon);
    if (j.contains("clip_norm") && !j.at("clip_norm").is_null()) c.clip_norm = j.at("clip_norm").get<double>();
    c.epochs = get_or(j, "epochs", c.epochs);
    c.batch_size = get_or(j, "batch_size", c.batch_size);
    c.seed = get_or(j, "seed", c.seed);
    c.validate();
    return c;
}

Json to_json(const SimulationSpec& s) {
    return Json{{"n", s.n},
                {"d", s.d},
                {"risk", to_string(s.risk_kind)},
                {"lambda_max", s.lambda_max},
                {"r", s.r},
                {"mean_u", s.mean_u},
                {"observed_fraction", s.observed_fraction},
                {"with_treatment", s.with_treatment},
                {"seed", s.seed}};
}

SimulationSpec simulation_spec_from_json(const Json& j) {
    SimulationSpec s;
    s.n = get_or(j, "n", s.n);
    s.d = get_or(j, "d", s.d);
    s.risk_kind = risk_kind_from_string(get_or<std::string>(j, "risk", to_string(s.risk_kind)));
    s.lambda_max = get_or(j, "lambda_max", s.lambda_max);
    s.r = get_or(j, "r", s.r);
    s.mean_u = get_or(j, "mean_u", s.mean_u);
    s.observed_fraction = get_or(j, "observed_fraction", s.observed_fraction);
    s.with_treatment = get_or(j, "with_treatment", s.with_treatment);
    s.seed = get_or(j, "seed", s.seed);
    s.validate();
    return s;
}

Json to_json(const SearchSpace& s) {
    std::vector<std::string> activations;
    for (auto a : s.activations) activations.push_back(to_string(a));
    return Json{{"hidden_layers", {s.hidden_layers.low, s.hidden_layers.high}},
                {"nodes_per_layer", {s.nodes_per_layer.low, s.nodes_per_layer.high}},
                {"activations", activations},
                {"dropout", {s.dropout.low, s.dropout.high}},
                {"l2", {s.l2.low, s.l2.high}},
                {"learning_rate", {s.learning_rate.low, s.learning_rate.high}},
                {"lr_decay", {s.lr_decay.low, s.lr_decay.high}},
                {"momentum", {s.momentum.low, s.momentum.high}}};
}

SearchSpace search_space_from_json(const Json& j) {
    SearchSpace s;
    auto ints = [&](const char* key, IntRange& r) {
        if (j.contains(key)) r = {j.at(key).at(0).get<int>(), j.at(key).at(1).get<int>()};
    };
    auto reals = [&](const char* key, RealRange& r) {
        if (j.contains(key)) r = {j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
    };
    ints("hidden_layers", s.hidden_layers);
    ints("nodes_per_layer", s.nodes_per_layer);
    if (j.contains("activations")) {
        s.activations.clear();
        for (const auto& a : j.at("activations")) s.activations.push_back(activation_from_string(a.get<std::string>()));
    }
    reals("dropout", s.dropout);
    reals("l2", s.l2);
    reals("learning_rate", s.learning_rate);
    reals("lr_decay", s.lr_decay);
    reals("momentum", s.momentum);
    s.validate();
    return s;
}

Json to_json(const StandardizationParams& p) {
    std::vector<bool> constant(p.constant.begin(), p.constant.end());
    return Json{{"means", p.means}, {"stddevs", p.stddevs}, {"constant", constant}};
}

Json to_json(const LinearCoxModel& m) {
    return Json{{"type", "linear_cph"},
                {"beta", vector_json(m.beta)},
                {"converged", m.converged},
                {"iterations", m.iterations},
                {"log_likelihood", number_or_null(m.final_log_likelihood)},
                {"diverged", m.diverged}};
}

Json to_json(const RiskNetwork& net) {
    Json layers = Json::array();
    for (const auto& layer : net.layers()) {
        std::vector<double> weights;
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(layer.weights(r, c));
        }
        layers.push_back(Json{{"rows", layer.weights.rows()},
                              {"cols", layer.weights.cols()},
                              {"weights", weights},
                              {"bias", vector_json(layer.bias)}});
    }
    return Json{{"type", "deep_cox"}, {"config", to_json(net.config())}, {"layers", layers}};
}

Json to_json(const RiskModel& model) {
    return std::visit([](const auto& m) { return to_json(m); }, model);
}

RiskModel risk_model_from_json(const Json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "linear_cph") {
        LinearCoxModel m;
        m.beta = vector_from_json(j.at("beta"));
        m.converged = get_or(j, "converged", false);
        m.iterations = get_or(j, "iterations", 0);
        m.final_log_likelihood = get_or(j, "log_likelihood", 0.0);
        m.diverged = get_or(j, "diverged", false);
        return m;
    }
    if (type == "deep_cox") {
        const auto config = network_config_from_json(j.at("config"));
        std::vector<DenseLayer> layers;
        for (const auto& lj : j.at("layers")) {
            const auto rows = lj.at("rows").get<Eigen::Index>();
            const auto cols = lj.at("cols").get<Eigen::Index>();
            const auto w = lj.at("weights").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
                throw std::invalid_argument("layer weight count does not match its shape");
            }
            DenseLayer layer;
            layer.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                w.data(), rows, cols);
            layer.bias = vector_from_json(lj.at("bias"));
            layers.push_back(std::move(layer));
        }
        return RiskNetwork(config, std::move(layers));
    }
    throw std::invalid_argument("unknown model type '" + type + "'");
}

Json to_json(const TrainingHistory& h) {
    Json val = Json::array();
    for (double c : h.validation_c_index) val.push_back(number_or_null(c));
    return Json{{"train_loss", h.train_loss}, {"validation_c_index", val}};
}

Json to_json(const KaplanMeierCurve& c) {
    return Json{{"time", c.event_times}, {"survival", c.survival}, {"ci_lower", c.ci_lower},
                {"ci_upper", c.ci_upper}, {"at_risk", c.at_risk}, {"deaths", c.deaths}};
}

Json to_json(const LogRankResult& r) {
    return Json{{"statistic", r.statistic},
                {"p_value", r.p_value},
                {"observed_a", r.observed_a},
                {"expected_a", r.expected_a},
                {"variance", r.variance}};
}

Json to_json(const SearchTrial& t) {
    Json j = to_json(t.network);
    Json opt = to_json(t.optimizer);
    return Json{{"index", t.index},
                {"network", j},
                {"optimizer", opt},
                {"fold_c_index", t.fold_c_index},
                {"mean_c_index", t.mean_c_index},
                {"diverged", t.diverged}};
}

Json to_json(const RecommendationReport& r) {
    std::vector<int> follows(r.follows.begin(), r.follows.end());
    return Json{{"groups", r.groups},
                {"rec_values", r.rec_values},
                {"assigned", r.assigned},
                {"recommended", r.recommended},
                {"follows_recommendation", follows},
                {"recommendation",
                 {{"n", r.recommendation_size()}, {"median_survival", optional_number(r.recommendation_median)}}},
                {"anti_recommendation",
                 {{"n", r.anti_recommendation_size()},
                  {"median_survival", optional_number(r.anti_recommendation_median)}}},
                {"log_rank", to_json(r.log_rank)}};
}

} // namespace deepcox
