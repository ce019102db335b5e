#pragma once

#include "deepcox/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace deepcox {

struct SurvivalSeries {
    std::string label;
    KaplanMeierCurve curve;
};

/// Step plot of one or more Kaplan-Meier curves with shaded confidence bands,
/// annotated with the log-rank p-value when given.
std::string render_survival_svg(const std::vector<SurvivalSeries>& series, std::optional<double> p_value,
                                const std::string& title);

} // namespace deepcox
