#include "deepcox/recommend.hpp"

#include <algorithm>
#include <stdexcept>

namespace deepcox {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_treatment_index(const RiskModel& model, std::size_t treatment_index) {
    if (static_cast<Eigen::Index>(treatment_index) >= input_width(model)) {
        throw std::invalid_argument("treatment index " + std::to_string(treatment_index) +
                                    " is outside the model inputs");
    }
}

} // namespace

Eigen::Index input_width(const RiskModel& model) {
    return std::visit(Overloaded{[](const LinearCoxModel& m) { return m.beta.size(); },
                                 [](const RiskNetwork& net) { return net.input_width(); }},
                      model);
}

Vector predict_risks(const RiskModel& model, const Matrix& x) {
    return std::visit(Overloaded{[&](const LinearCoxModel& m) { return predict_linear_risks(m, x); },
                                 [&](const RiskNetwork& net) { return forward(net, x, Mode::infer); }},
                      model);
}

double predict_risk(const RiskModel& model, std::span<const double> x) {
    const Matrix row = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    return predict_risks(model, row)[0];
}

double rec_fn(const RiskModel& model, std::span<const double> x, std::size_t treatment_index, int i, int j) {
    check_treatment_index(model, treatment_index);
    if (static_cast<Eigen::Index>(x.size()) != input_width(model)) {
        throw std::invalid_argument("covariate length does not match the model");
    }
    if (const auto* linear = std::get_if<LinearCoxModel>(&model)) {
        return cph_recommender(*linear, treatment_index, i, j);
    }
    Matrix rows(2, static_cast<Eigen::Index>(x.size()));
    rows.row(0) = Eigen::Map<const Eigen::RowVectorXd>(x.data(), rows.cols());
    rows.row(1) = rows.row(0);
    rows(0, static_cast<Eigen::Index>(treatment_index)) = i;
    rows(1, static_cast<Eigen::Index>(treatment_index)) = j;
    const Vector h = predict_risks(model, rows);
    return h[0] - h[1];
}

int recommend_treatment(const RiskModel& model, std::span<const double> x, std::size_t treatment_index,
                        std::span<const int> groups) {
    if (groups.empty()) throw std::invalid_argument("no treatment groups to choose from");
    check_treatment_index(model, treatment_index);
    std::vector<double> row(x.begin(), x.end());
    int best = groups[0];
    double best_risk = 0.0;
    bool first = true;
    for (int g : groups) {
        row[treatment_index] = g;
        const double h = predict_risk(model, row);
        if (first || h < best_risk || (h == best_risk && g < best)) {
            best = g;
            best_risk = h;
            first = false;
        }
    }
    return best;
}

std::size_t RecommendationReport::recommendation_size() const {
    return static_cast<std::size_t>(std::count(follows.begin(), follows.end(), true));
}

std::size_t RecommendationReport::anti_recommendation_size() const {
    return follows.size() - recommendation_size();
}

RecommendationReport evaluate_recommendations(const SurvivalDataset& ds, const RiskModel& model,
                                              std::size_t treatment_index, double alpha) {
    if (!ds.has_treatments()) throw std::invalid_argument("dataset has no treatment assignments");
    check_treatment_index(model, treatment_index);
    const auto& assigned = *ds.treatments();
    const int k = *std::max_element(assigned.begin(), assigned.end()) + 1;
    if (k < 2) throw std::invalid_argument("recommendations need at least two treatment groups");

    RecommendationReport report;
    const auto n = static_cast<Eigen::Index>(ds.size());
    report.group_risks.resize(n, k);
    Matrix x = ds.covariates();
    for (int g = 0; g < k; ++g) {
        report.groups.push_back(g);
        x.col(static_cast<Eigen::Index>(treatment_index)).setConstant(g);
        report.group_risks.col(g) = predict_risks(model, x);
    }

    std::vector<double> rec_times, anti_times;
    std::vector<int> rec_events, anti_events;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (const auto* linear = std::get_if<LinearCoxModel>(&model)) {
            report.rec_values.push_back(cph_recommender(*linear, treatment_index, 1, 0));
        } else {
            report.rec_values.push_back(report.group_risks(i, 1) - report.group_risks(i, 0));
        }
        int best = 0;
        if (const auto* linear = std::get_if<LinearCoxModel>(&model)) {
            // The linear model's group effect is beta_t * g for every patient.
            const double beta_t = linear->beta[static_cast<Eigen::Index>(treatment_index)];
            best = beta_t < 0.0 ? k - 1 : 0;
        } else {
            for (int g = 1; g < k; ++g) {
                if (report.group_risks(i, g) < report.group_risks(i, best)) best = g;
            }
        }
        report.assigned.push_back(assigned[i]);
        report.recommended.push_back(best);
        const bool follows = assigned[i] == best;
        report.follows.push_back(follows);
        (follows ? rec_times : anti_times).push_back(ds.times()[i]);
        (follows ? rec_events : anti_events).push_back(ds.events()[i]);
    }
    if (rec_times.empty()) throw std::runtime_error("Recommendation subset is empty");
    if (anti_times.empty()) throw std::runtime_error("Anti-Recommendation subset is empty");

    report.recommendation_curve = kaplan_meier(rec_times, rec_events, alpha);
    report.anti_recommendation_curve = kaplan_meier(anti_times, anti_events, alpha);
    report.recommendation_median = median_survival(report.recommendation_curve);
    report.anti_recommendation_median = median_survival(report.anti_recommendation_curve);
    report.log_rank = log_rank(rec_times, rec_events, anti_times, anti_events);
    return report;
}

} // namespace deepcox
