#include "deepcox/metrics.hpp"

#include "deepcox/quantile.hpp"
#include "deepcox/random.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace deepcox {

double ConcordanceCounts::value() const {
    if (comparable == 0) throw std::runtime_error("no comparable pairs");
    return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied_risk)) /
           static_cast<double>(comparable);
}

namespace {

/// Fenwick tree of counts over dense risk ranks.
class RankCounter {
public:
    explicit RankCounter(std::size_t size) : tree_(size + 1, 0) {}

    void add(std::size_t rank) {
        for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
        ++total_;
    }
    /// Number of stored ranks strictly below `rank`.
    std::uint64_t below(std::size_t rank) const {
        std::uint64_t sum = 0;
        for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) sum += tree_[i];
        return sum;
    }
    std::uint64_t at(std::size_t rank) const { return below(rank + 1) - below(rank); }
    std::uint64_t total() const { return total_; }

private:
    std::vector<std::uint64_t> tree_;
    std::uint64_t total_ = 0;
};

void check_same_length(std::size_t a, std::size_t b, std::size_t c) {
    if (a != b || a != c) throw std::invalid_argument("times, events and risks differ in length");
}

} // namespace

ConcordanceCounts concordance_counts(std::span<const double> times, std::span<const int> events,
                                     std::span<const double> risks) {
    check_same_length(times.size(), events.size(), risks.size());
    const std::size_t n = times.size();

    std::vector<double> distinct(risks.begin(), risks.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        rank[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), risks[i]) -
                                           distinct.begin());
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });

    // Walk from the latest time; the counter holds everyone strictly later.
    ConcordanceCounts counts;
    RankCounter later(distinct.size());
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin;
        while (end < n && times[order[end]] == times[order[begin]]) ++end;
        for (std::size_t a = begin; a < end; ++a) {
            const auto i = order[a];
            if (events[i] != 1) continue;
            counts.comparable += later.total();
            counts.concordant += later.below(rank[i]);
            counts.tied_risk += later.at(rank[i]);
            for (std::size_t b = begin; b < end; ++b) {
                const auto j = order[b];
                if (events[j] == 1) continue;
                ++counts.comparable;
                if (risks[i] > risks[j]) ++counts.concordant;
                else if (risks[i] == risks[j]) ++counts.tied_risk;
            }
        }
        for (std::size_t a = begin; a < end; ++a) later.add(rank[order[a]]);
        begin = end;
    }
    return counts;
}

double concordance_index(std::span<const double> times, std::span<const int> events,
                         std::span<const double> risks) {
    return concordance_counts(times, events, risks).value();
}

double concordance_index(const SurvivalDataset& ds, const Vector& risks) {
    return concordance_index(std::span<const double>(ds.times().data(), ds.size()), ds.events(),
                             std::span<const double>(risks.data(), static_cast<std::size_t>(risks.size())));
}

// ---------------------------------------------------------------------------

BootstrapInterval bootstrap_ci(std::span<const double> times, std::span<const int> events,
                               std::span<const double> risks, int replicates, double alpha, std::uint64_t seed) {
    check_same_length(times.size(), events.size(), risks.size());
    if (replicates < 2) throw std::invalid_argument("bootstrap needs at least two replicates");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (times.empty()) throw std::invalid_argument("bootstrap of an empty sample");
    constexpr int kMaxRedraws = 100;

    const std::size_t n = times.size();
    BootstrapInterval out;
    out.replicates = replicates;
    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(replicates));
    std::vector<double> t(n), r(n);
    std::vector<int> e(n);
    for (int b = 0; b < replicates; ++b) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        for (int attempt = 0;; ++attempt) {
            for (std::size_t k = 0; k < n; ++k) {
                const auto i = rng.index(n);
                t[k] = times[i];
                e[k] = events[i];
                r[k] = risks[i];
            }
            const auto counts = concordance_counts(t, e, r);
            if (counts.comparable > 0) {
                stats.push_back(counts.value());
                break;
            }
            if (attempt >= kMaxRedraws) {
                throw std::runtime_error("bootstrap resamples repeatedly had no comparable pairs");
            }
            ++out.redraws;
        }
    }
    out.lower = empirical_quantile(stats, alpha / 2.0);
    out.upper = empirical_quantile(stats, 1.0 - alpha / 2.0);
    return out;
}

BootstrapInterval bootstrap_ci(const SurvivalDataset& ds, const Vector& risks, int replicates, double alpha,
                               std::uint64_t seed) {
    return bootstrap_ci(std::span<const double>(ds.times().data(), ds.size()), ds.events(),
                        std::span<const double>(risks.data(), static_cast<std::size_t>(risks.size())), replicates,
                        alpha, seed);
}

// ---------------------------------------------------------------------------

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double chi_squared_1_sf(double statistic) {
    if (!(statistic > 0.0)) return 1.0;
    return std::erfc(std::sqrt(statistic / 2.0));
}

KaplanMeierCurve kaplan_meier(std::span<const double> times, std::span<const int> events, double alpha,
                              BandTransform transform) {
    if (times.size() != events.size()) throw std::invalid_argument("times and events differ in length");
    if (times.empty()) throw std::invalid_argument("Kaplan-Meier needs at least one patient");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");

    std::map<double, std::pair<std::size_t, std::size_t>> tally;  // time -> (removed, deaths)
    for (std::size_t i = 0; i < times.size(); ++i) {
        auto& slot = tally[times[i]];
        ++slot.first;
        if (events[i] == 1) ++slot.second;
    }

    KaplanMeierCurve curve;
    curve.alpha = alpha;
    curve.transform = transform;
    const double z = normal_quantile(1.0 - alpha / 2.0);
    std::size_t at_risk = times.size();
    double s = 1.0;
    double greenwood = 0.0;
    for (const auto& [t, slot] : tally) {
        const auto [removed, deaths] = slot;
        if (deaths > 0) {
            const double n = static_cast<double>(at_risk);
            const double d = static_cast<double>(deaths);
            s *= 1.0 - d / n;
            greenwood = deaths < at_risk ? greenwood + d / (n * (n - d)) : greenwood;
            double lo = 0.0;
            double hi = 0.0;
            if (s > 0.0) {
                const double se = std::sqrt(greenwood);
                if (transform == BandTransform::log) {
                    lo = s * std::exp(-z * se);
                    hi = s * std::exp(z * se);
                } else {
                    lo = s - z * s * se;
                    hi = s + z * s * se;
                }
            }
            curve.event_times.push_back(t);
            curve.survival.push_back(s);
            curve.ci_lower.push_back(std::clamp(lo, 0.0, 1.0));
            curve.ci_upper.push_back(std::clamp(hi, 0.0, 1.0));
            curve.at_risk.push_back(at_risk);
            curve.deaths.push_back(deaths);
        }
        at_risk -= removed;
    }
    return curve;
}

std::optional<double> median_survival(const KaplanMeierCurve& curve) {
    // Slack absorbs rounding in the running product, e.g. 3/4 * 2/3.
    constexpr double kSlack = 1e-12;
    for (std::size_t k = 0; k < curve.survival.size(); ++k) {
        if (curve.survival[k] <= 0.5 + kSlack) return curve.event_times[k];
    }
    return std::nullopt;
}

LogRankResult log_rank(std::span<const double> times_a, std::span<const int> events_a,
                       std::span<const double> times_b, std::span<const int> events_b) {
    if (times_a.size() != events_a.size() || times_b.size() != events_b.size()) {
        throw std::invalid_argument("times and events differ in length");
    }
    if (times_a.empty() || times_b.empty()) throw std::invalid_argument("log-rank groups must be non-empty");

    struct Tally {
        std::size_t removed_a = 0, removed_b = 0, deaths_a = 0, deaths_b = 0;
    };
    std::map<double, Tally> tally;
    for (std::size_t i = 0; i < times_a.size(); ++i) {
        auto& t = tally[times_a[i]];
        ++t.removed_a;
        if (events_a[i] == 1) ++t.deaths_a;
    }
    for (std::size_t i = 0; i < times_b.size(); ++i) {
        auto& t = tally[times_b[i]];
        ++t.removed_b;
        if (events_b[i] == 1) ++t.deaths_b;
    }

    LogRankResult out;
    double n_a = static_cast<double>(times_a.size());
    double n_b = static_cast<double>(times_b.size());
    for (const auto& [time, t] : tally) {
        const double d = static_cast<double>(t.deaths_a + t.deaths_b);
        const double n = n_a + n_b;
        if (d > 0.0) {
            out.observed_a += static_cast<double>(t.deaths_a);
            out.expected_a += d * n_a / n;
            if (n > 1.0) out.variance += n_a * n_b * d * (n - d) / (n * n * (n - 1.0));
        }
        n_a -= static_cast<double>(t.removed_a);
        n_b -= static_cast<double>(t.removed_b);
    }
    const double diff = out.observed_a - out.expected_a;
    out.statistic = out.variance > 0.0 ? diff * diff / out.variance : 0.0;
    out.p_value = chi_squared_1_sf(out.statistic);
    return out;
}

double risk_mse(const Vector& predicted, const Vector& truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("risk vectors differ in length");
    if (predicted.size() == 0) throw std::invalid_argument("risk vectors are empty");
    const Vector diff = (predicted.array() - predicted.mean()) - (truth.array() - truth.mean());
    return diff.squaredNorm() / static_cast<double>(diff.size());
}

} // namespace deepcox
