#pragma once

#include "deepcox/data.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace deepcox {

/// Pair counts behind Harrell's C. A pair is comparable when the earlier
/// time is an observed event; a censored time equal to an event time counts
/// as surviving past it, while two events at the same time are not comparable.
struct ConcordanceCounts {
    std::uint64_t concordant = 0;
    std::uint64_t tied_risk = 0;
    std::uint64_t comparable = 0;

    double value() const;
    friend bool operator==(const ConcordanceCounts&, const ConcordanceCounts&) = default;
};

/// O(n log n) pair counting. Never throws.
ConcordanceCounts concordance_counts(std::span<const double> times, std::span<const int> events,
                                     std::span<const double> risks);

/// Harrell's C. Throws std::runtime_error("no comparable pairs").
double concordance_index(std::span<const double> times, std::span<const int> events,
                         std::span<const double> risks);
double concordance_index(const SurvivalDataset& ds, const Vector& risks);

struct BootstrapInterval {
    double lower = 0.0;
    double upper = 0.0;
    int replicates = 0;
    /// Resamples discarded for having no comparable pair.
    int redraws = 0;
};

/// Percentile interval of the C-index over B resamples of (time, event, risk)
/// triples. Replicate b draws from its own seed derived from `seed`.
BootstrapInterval bootstrap_ci(std::span<const double> times, std::span<const int> events,
                               std::span<const double> risks, int replicates = 200, double alpha = 0.05,
                               std::uint64_t seed = 0);
BootstrapInterval bootstrap_ci(const SurvivalDataset& ds, const Vector& risks, int replicates = 200,
                               double alpha = 0.05, std::uint64_t seed = 0);

enum class BandTransform { log, plain };

struct KaplanMeierCurve {
    std::vector<double> event_times;
    std::vector<double> survival;
    std::vector<double> ci_lower;
    std::vector<double> ci_upper;
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> deaths;
    double alpha = 0.05;
    BandTransform transform = BandTransform::log;
};

/// Product-limit estimate with Greenwood bands clipped to [0, 1].
KaplanMeierCurve kaplan_meier(std::span<const double> times, std::span<const int> events,
                              double alpha = 0.05, BandTransform transform = BandTransform::log);

/// Earliest event time with S(t) <= 0.5.
std::optional<double> median_survival(const KaplanMeierCurve& curve);

struct LogRankResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double observed_a = 0.0;
    double expected_a = 0.0;
    double variance = 0.0;
};

LogRankResult log_rank(std::span<const double> times_a, std::span<const int> events_a,
                       std::span<const double> times_b, std::span<const int> events_b);

/// Mean squared error after centring both vectors (risk is only defined up to
/// an additive constant).
double risk_mse(const Vector& predicted, const Vector& truth);

/// Upper tail of the chi-squared distribution with one degree of freedom.
double chi_squared_1_sf(double statistic);

/// Standard normal quantile.
double normal_quantile(double p);

} // namespace deepcox
