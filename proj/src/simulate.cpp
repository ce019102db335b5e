#include "deepcox/simulate.hpp"

#include "deepcox/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace deepcox {

std::string to_string(RiskKind kind) {
    return kind == RiskKind::linear ? "linear" : "gaussian";
}

RiskKind risk_kind_from_string(const std::string& name) {
    if (name == "linear") return RiskKind::linear;
    if (name == "gaussian") return RiskKind::gaussian;
    throw std::invalid_argument("unknown risk kind '" + name + "'");
}

void SimulationSpec::validate() const {
    if (n < 1) throw std::invalid_argument("simulation needs n >= 1");
    if (d < 2) throw std::invalid_argument("simulation needs d >= 2");
    if (!(observed_fraction > 0.0 && observed_fraction < 1.0)) {
        throw std::invalid_argument("observed_fraction must lie in (0, 1)");
    }
    if (!(mean_u > 0.0)) throw std::invalid_argument("mean_u must be positive");
    if (risk_kind == RiskKind::gaussian && !(lambda_max > 0.0 && r > 0.0)) {
        throw std::invalid_argument("lambda_max and r must be positive");
    }
}

double risk_linear(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("linear risk needs at least two covariates");
    return x[0] + 2.0 * x[1];
}

double risk_gaussian(std::span<const double> x, double lambda_max, double r) {
    if (x.size() < 2) throw std::invalid_argument("gaussian risk needs at least two covariates");
    if (!(lambda_max > 0.0) || !(r > 0.0)) {
        throw std::invalid_argument("lambda_max and r must be positive");
    }
    return std::log(lambda_max) * std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2.0 * r * r));
}

double true_risk(const SimulationSpec& spec, std::span<const double> x) {
    return spec.risk_kind == RiskKind::linear ? risk_linear(x) : risk_gaussian(x, spec.lambda_max, spec.r);
}

double censor_threshold(std::span<const double> raw_times, double observed_fraction) {
    if (raw_times.empty()) throw std::invalid_argument("censor threshold of an empty sample");
    return empirical_quantile(raw_times, observed_fraction);
}

SimulatedDataset generate(const SimulationSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto d = static_cast<Eigen::Index>(spec.d);
    Rng rng(spec.seed);

    // Row-major so each patient's covariates form a contiguous span.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(n, d);
    std::vector<int> treatments;
    Vector risks(n);
    std::vector<double> raw(spec.n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
        const std::span<const double> row(x.row(i).data(), spec.d);
        double h = true_risk(spec, row);
        if (spec.with_treatment) {
            const int tau = rng.bernoulli(0.5) ? 1 : 0;
            treatments.push_back(tau);
            h *= tau;
        }
        risks[i] = h;
        raw[i] = rng.exponential(spec.mean_u) / std::exp(h);
    }

    const double t0 = censor_threshold(raw, spec.observed_fraction);
    Vector times(n);
    std::vector<int> events(spec.n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool observed = raw[i] <= t0;
        times[i] = observed ? raw[i] : t0;
        events[i] = observed ? 1 : 0;
    }

    std::optional<std::vector<int>> tr;
    if (spec.with_treatment) tr = std::move(treatments);
    return SimulatedDataset{SurvivalDataset(Matrix(x), std::move(times), std::move(events), std::move(tr)),
                            std::move(risks), t0};
}

} // namespace deepcox
