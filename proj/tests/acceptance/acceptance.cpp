// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include "deepcox/experiment.hpp"
#include "deepcox/metrics.hpp"
#include "deepcox/riskmlp.hpp"
#include "../test_support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace deepcox;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct ModelPair {
    ExperimentOutcome cph, deep;
    double deep_seconds = 0.0;
};

ModelPair run_pair(ExperimentConfig config) {
    ModelPair out;
    config.model = ModelKind::linear_cph;
    out.cph = run_experiment(config);
    config.model = ModelKind::deep_cox;
    const auto start = std::chrono::steady_clock::now();
    out.deep = run_experiment(config);
    out.deep_seconds = seconds_since(start);
    return out;
}

double metric(const ExperimentOutcome& o, const char* key) { return o.metrics.at(key).get<double>(); }

void simulated_linear() {
    const auto r = run_pair(simulated_linear_config(kSeed));
    const double c_cph = metric(r.cph, "c_index"), c_deep = metric(r.deep, "c_index");
    report(1, c_cph >= 0.75 && std::abs(c_deep - c_cph) <= 0.02 && r.deep_seconds <= 600.0,
           fmt("linear CPH C=%.4f (>=0.75), deep C=%.4f (|diff|=%.4f <=0.02), deep runtime %.1fs (<=600s)", c_cph,
               c_deep, std::abs(c_deep - c_cph), r.deep_seconds));
    const double mse_cph = metric(r.cph, "risk_mse"), mse_deep = metric(r.deep, "risk_mse");
    report(2, mse_deep <= 1.0 && mse_cph >= 5.0 * mse_deep,
           fmt("deep centred MSE=%.4f (<=1.0), CPH centred MSE=%.4f (>=5x deep = %.4f)", mse_deep, mse_cph,
               5.0 * mse_deep));
}

void simulated_nonlinear() {
    const auto r = run_pair(simulated_nonlinear_config(kSeed));
    const double c_cph = metric(r.cph, "c_index"), c_deep = metric(r.deep, "c_index");
    report(3, c_cph >= 0.47 && c_cph <= 0.54 && c_deep >= 0.60,
           fmt("linear CPH C=%.4f (in [0.47,0.54]), deep C=%.4f (>=0.60); true-risk C on this test set=%.4f", c_cph,
               c_deep, metric(r.deep, "true_risk_c_index")));
}

void simulated_treatment() {
    const auto config = simulated_treatment_config(kSeed);
    const auto deep = run_experiment(config);
    const double c = metric(deep, "c_index");
    const auto rec = evaluate_recommendations(deep.data.test, deep.fit.model, *deep.data.treatment_index, config.alpha);
    const double rec_median = rec.recommendation_median.value_or(std::nan(""));
    const double anti_median = rec.anti_recommendation_median.value_or(std::nan(""));
    report(4, c >= 0.55 && rec_median > anti_median && rec.log_rank.p_value < 0.05,
           fmt("deep C=%.4f (>=0.55), Rec median %.4f > Anti-Rec median %.4f, log-rank p=%.3g (<0.05)", c, rec_median,
               anti_median, rec.log_rank.p_value));
}

void gradient_oracle() {
    Rng rng(kSeed);
    double worst_risk = 0.0, worst_param = 0.0;
    const int instances = 200;
    for (int trial = 0; trial < instances; ++trial) {
        const std::size_t n = 2 + rng.index(29);
        const Eigen::Index d = 1 + Eigen::Index(rng.index(5));
        const auto ds = testkit::random_dataset(rng, n, d);
        const auto view = sort_view(ds);
        NetworkConfig cfg;
        cfg.hidden_layers = 1 + int(rng.index(3));
        cfg.nodes_per_layer = 1 + int(rng.index(8));
        cfg.activation = trial % 2 ? Activation::relu : Activation::selu;
        cfg.l2_coefficient = rng.uniform(0.0, 2.0);
        auto net = init_network(cfg, d, rng.next_u64());
        for (auto& layer : net.layers())
            for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias[k] = rng.uniform(-0.5, 0.5);

        ForwardCache cache;
        const Vector h = forward(net, ds.covariates(), Mode::train, 0, &cache);
        const Vector d_risk = cox_loss_grad(h, ds, view);
        const auto loss_of_risks = [&](const Vector& r) { return cox_loss(r, ds, view); };
        worst_risk = std::max(worst_risk, testkit::fd_relative_error(loss_of_risks, h, d_risk, 1e-5));

        auto probe = net;
        const auto loss_of_params = [&](const Vector& p) {
            probe.set_parameters(p);
            return cox_loss(forward(probe, ds.covariates()), ds, view, cfg.l2_coefficient, probe);
        };
        const Vector analytic = backward(net, cache, d_risk).flat();
        worst_param = std::max(worst_param,
                               testkit::fd_relative_error(loss_of_params, net.parameters(), analytic, 1e-5));
    }
    report(5, worst_risk <= 1e-5 && worst_param <= 1e-5,
           fmt("%g instances, n<=30: max rel error w.r.t. risks %.2e, w.r.t. parameters %.2e (<=1e-5)", instances,
               worst_risk, worst_param));
}

void concordance_oracle() {
    Rng rng(kSeed);
    int checked = 0, mismatches = 0, with_ties = 0;
    for (int trial = 0; trial < 3000 && checked < 2000; ++trial) {
        const auto s = testkit::random_sample(rng, 1 + rng.index(50), 2 + int(rng.index(10)), 1 + int(rng.index(6)));
        const auto oracle = testkit::brute_force_pairs(s.times, s.events, s.risks);
        if (oracle.usable == 0) continue;
        ++checked;
        const std::set<double> distinct(s.risks.begin(), s.risks.end());
        with_ties += distinct.size() < s.risks.size();
        if (concordance_index(s.times, s.events, s.risks) != oracle.concordant / oracle.usable) ++mismatches;
    }
    report(6, checked >= 1000 && mismatches == 0 && with_ties > 0,
           fmt("%g censored instances (n<=50, %g with risk ties): %g mismatches against brute force", checked,
               with_ties, mismatches));
}

void statistical_fixtures() {
    double worst = 0.0;
    const auto upd = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    const auto km1 = kaplan_meier(std::vector<double>{1, 2, 3}, std::vector<int>{1, 1, 1});
    upd(km1.survival[0], 2.0 / 3.0);
    upd(km1.survival[1], 1.0 / 3.0);
    upd(km1.survival[2], 0.0);
    upd(*median_survival(km1), 2.0);
    const auto km2 = kaplan_meier(std::vector<double>{1, 2, 3}, std::vector<int>{1, 0, 1});
    upd(km2.survival[0], 2.0 / 3.0);
    upd(km2.survival[1], 0.0);
    const bool single_ok = kaplan_meier(std::vector<double>{5}, std::vector<int>{0}).event_times.empty();
    const auto lr = log_rank(std::vector<double>{1, 2}, std::vector<int>{1, 1}, std::vector<double>{10, 20},
                             std::vector<int>{1, 1});
    upd(lr.observed_a, 2.0);
    upd(lr.expected_a, 5.0 / 6.0);
    upd(lr.variance, 17.0 / 36.0);
    upd(lr.statistic, 49.0 / 17.0);
    const std::vector<double> t{1, 3, 3, 6, 8};
    const std::vector<int> e{1, 0, 1, 1, 0};
    const auto same = log_rank(t, e, t, e);
    report(7, worst <= 1e-9 && single_ok && same.statistic == 0.0 && same.p_value == 1.0,
           fmt("max deviation from hand values %.2e (<=1e-9); identical-group statistic %g, p %g", worst,
               same.statistic, same.p_value));
}

void linear_recommender() {
    auto config = simulated_treatment_config(kSeed);
    config.model = ModelKind::linear_cph;
    const auto out = run_experiment(config);
    const auto& test = out.data.test;
    const auto rec = evaluate_recommendations(test, out.fit.model, *out.data.treatment_index, config.alpha);
    const auto [lo, hi] = std::minmax_element(rec.rec_values.begin(), rec.rec_values.end());
    // The Recommendation subset must be exactly one treatment arm.
    const auto& arms = *test.treatments();
    bool matches_arm0 = true, matches_arm1 = true;
    for (std::size_t i = 0; i < test.size(); ++i) {
        matches_arm0 &= rec.follows[i] == (arms[i] == 0);
        matches_arm1 &= rec.follows[i] == (arms[i] == 1);
    }
    report(8, *hi - *lo < 1e-12 && (matches_arm0 || matches_arm1),
           fmt("rec spread max-min=%.2e (<1e-12); partition equals treatment/control split: ", *hi - *lo) +
               (matches_arm0 || matches_arm1 ? "yes" : "no"));
}

void shift_invariance() {
    Rng rng(kSeed);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto s = testkit::random_sample(rng, 1 + rng.index(60));
        s.events[rng.index(s.events.size())] = 1;
        const Vector t = Eigen::Map<Vector>(s.times.data(), Eigen::Index(s.times.size()));
        const auto view = sort_view(t);
        Vector h(t.size());
        for (Eigen::Index k = 0; k < h.size(); ++k) h[k] = rng.uniform(-5.0, 5.0);
        const Vector shifted = h.array() + rng.uniform(-100.0, 100.0);
        worst = std::max(worst, std::abs(cox_loss(shifted, s.events, view) - cox_loss(h, s.events, view)));
    }
    report(9, worst <= 1e-9, fmt("1000 random instances: max |loss(h+c) - loss(h)| = %.2e (<=1e-9)", worst));
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DEEPCOX_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) files[entry.path().filename().string()] = slurp(entry.path());
    return files;
}

void cli_reproducibility() {
    const fs::path root = fs::temp_directory_path() / "deepcox_acceptance_cli";
    fs::remove_all(root);
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "simulate --risk gaussian --n 2000 --d 10 --treatment"},
        {"train", "train --preset linear"},
        {"train_cph", "train --preset nonlinear --model linear_cph"},
        {"recommend", "recommend --preset treatment"},
        {"km", "km --preset treatment --group-by subset --part test"},
        {"search", "search --csv " + (root / "simulate" / "dataset.csv").string() +
                       " --treatment-col treatment --trials 4 --k 3"},
    };
    int files = 0, differing = 0, failed_runs = 0;
    for (const auto& [name, args] : commands) {
        const auto dir = root / name;
        const std::string line = "--seed 1 --out-dir " + dir.string() + " " + args;
        failed_runs += run_cli(line) != 0;
        const auto first = snapshot(dir);
        if (name != "simulate") fs::remove_all(dir);
        else for (const auto& [file, _] : first) fs::remove(dir / file);
        failed_runs += run_cli(line) != 0;
        const auto second = snapshot(dir);
        files += int(first.size());
        for (const auto& [file, bytes] : first) {
            const auto twin = second.find(file);
            if (twin == second.end() || twin->second != bytes) ++differing;
        }
        differing += int(second.size() > first.size());
    }
    fs::remove_all(root);
    report(10, failed_runs == 0 && differing == 0 && files > 0,
           fmt("%g CLI commands each rerun into the same directory: %g report files compared, %g differ, %g runs failed",
               double(commands.size()), files, differing, failed_runs));
}

} // namespace

int main() {
    const std::vector<std::function<void()>> criteria{simulated_linear, simulated_nonlinear, simulated_treatment,
                                                      gradient_oracle,  concordance_oracle,  statistical_fixtures,
                                                      linear_recommender, shift_invariance,  cli_reproducibility};
    for (const auto& run : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            std::printf("FAIL criterion run aborted: %s\n", e.what());
            ++failures;
        }
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
