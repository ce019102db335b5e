#pragma once

#include "deepcox/coxlinear.hpp"
#include "deepcox/metrics.hpp"
#include "deepcox/riskmlp.hpp"

#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace deepcox {

/// Either fitted model; both map a design-matrix row to a log-risk.
using RiskModel = std::variant<LinearCoxModel, RiskNetwork>;

Eigen::Index input_width(const RiskModel& model);
Vector predict_risks(const RiskModel& model, const Matrix& x);
double predict_risk(const RiskModel& model, std::span<const double> x);

/// h_i(x) - h_j(x): the log hazard ratio of treatment i over treatment j,
/// obtained by overwriting the treatment input. Positive favours j.
double rec_fn(const RiskModel& model, std::span<const double> x, std::size_t treatment_index, int i, int j);

/// Group with the lowest predicted risk; ties go to the smallest label.
int recommend_treatment(const RiskModel& model, std::span<const double> x, std::size_t treatment_index,
                        std::span<const int> groups);

struct RecommendationReport {
    std::vector<int> groups;
    /// Predicted risk of every patient under every group (n x groups).
    Matrix group_risks;
    /// rec_{1,0}(x) per patient (h under group 1 minus h under group 0).
    std::vector<double> rec_values;
    std::vector<int> assigned;
    std::vector<int> recommended;
    /// True for the Recommendation subset (assigned == recommended).
    std::vector<bool> follows;

    KaplanMeierCurve recommendation_curve;
    KaplanMeierCurve anti_recommendation_curve;
    std::optional<double> recommendation_median;
    std::optional<double> anti_recommendation_median;
    LogRankResult log_rank;

    std::size_t recommendation_size() const;
    std::size_t anti_recommendation_size() const;
};

/// `ds` covariates are the model inputs with the treatment at
/// `treatment_index`; `ds.treatments()` holds the assigned groups. Groups are
/// 0..K-1 with K the largest label plus one.
RecommendationReport evaluate_recommendations(const SurvivalDataset& ds, const RiskModel& model,
                                              std::size_t treatment_index, double alpha = 0.05);

} // namespace deepcox
