#pragma once

#include "deepcox/data.hpp"
#include "deepcox/quantile.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace deepcox {

enum class RiskKind { linear, gaussian };

std::string to_string(RiskKind kind);
RiskKind risk_kind_from_string(const std::string& name);

/// Parameters of the exponential Cox generator. Covariates are uniform on
/// [-1, 1)^d and only x0, x1 carry risk.
struct SimulationSpec {
    std::size_t n = 1000;
    std::size_t d = 10;
    RiskKind risk_kind = RiskKind::linear;
    double lambda_max = 5.0;
    double r = 0.5;
    double mean_u = 5.0;
    double observed_fraction = 0.9;
    /// Adds a Bernoulli(0.5) treatment group; the risk then applies to group 1 only.
    bool with_treatment = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimulatedDataset {
    SurvivalDataset dataset;
    /// Ground-truth log-risk of each patient under its assigned treatment.
    Vector true_risks;
    double censor_time = 0.0;
};

/// x0 + 2 x1.
double risk_linear(std::span<const double> x);

/// log(lambda_max) * exp(-(x0^2 + x1^2) / (2 r^2)).
double risk_gaussian(std::span<const double> x, double lambda_max, double r);

/// Risk of the configured kind at one covariate row.
double true_risk(const SimulationSpec& spec, std::span<const double> x);

/// End-of-study time leaving `observed_fraction` of the raw death times observed.
double censor_threshold(std::span<const double> raw_times, double observed_fraction);

SimulatedDataset generate(const SimulationSpec& spec);

} // namespace deepcox
