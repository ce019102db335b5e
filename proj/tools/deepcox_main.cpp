// deepcox command-line driver.
#include "deepcox/errors.hpp"
#include "deepcox/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using deepcox::ConfigError;
using deepcox::ExperimentConfig;
using deepcox::Json;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> config;
};

struct DataOptions {
    std::string preset;
    std::string csv;
    std::string time_column = "time";
    std::string event_column = "event";
    std::string treatment_column;
    std::string true_risk;
    std::string model;
};

Json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return Json::parse(buffer.str());
    } catch (const std::exception& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
}

/// Config from --config, a preset, or --csv flags; global flags override.
ExperimentConfig resolve_config(const GlobalOptions& g, const DataOptions& d) {
    const int sources = int(g.config.has_value()) + int(!d.preset.empty()) + int(!d.csv.empty());
    if (sources != 1) throw ConfigError("give exactly one of --config, --preset or --csv");

    Json j;
    if (g.config) {
        j = read_json_file(*g.config);
        if (g.seed) j["seed"] = *g.seed;
    } else if (!d.preset.empty()) {
        const std::uint64_t seed = g.seed.value_or(1);
        if (d.preset == "linear") j = to_json(deepcox::simulated_linear_config(seed));
        else if (d.preset == "nonlinear") j = to_json(deepcox::simulated_nonlinear_config(seed));
        else if (d.preset == "treatment") j = to_json(deepcox::simulated_treatment_config(seed));
        else throw ConfigError("unknown preset '" + d.preset + "'");
    } else {
        j = Json{{"schema_version", deepcox::kSchemaVersion},
                 {"seed", g.seed.value_or(0)},
                 {"dataset",
                  {{"csv",
                    {{"path", d.csv},
                     {"time_column", d.time_column},
                     {"event_column", d.event_column},
                     {"treatment_column", d.treatment_column},
                     {"true_risk_path", d.true_risk}}}}}};
    }
    if (!d.model.empty()) j["model"] = d.model;
    if (g.out_dir) j["output_dir"] = *g.out_dir;
    return deepcox::experiment_config_from_json(j);
}

void add_data_options(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--preset", d.preset, "Built-in simulated experiment")
        ->check(CLI::IsMember({"linear", "nonlinear", "treatment"}));
    cmd->add_option("--csv", d.csv, "Survival CSV with a header row");
    cmd->add_option("--time-col", d.time_column, "Time column name");
    cmd->add_option("--event-col", d.event_column, "Event indicator column name");
    cmd->add_option("--treatment-col", d.treatment_column, "Treatment column name");
    cmd->add_option("--true-risk", d.true_risk, "Sidecar CSV with a true_risk column");
    cmd->add_option("--model", d.model, "Model kind")->check(CLI::IsMember({"linear_cph", "deep_cox"}));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cox proportional hazards survival models: simulation, training and treatment recommendation"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Master seed")->type_name("UINT");
    app.add_option("--out-dir", g.out_dir, "Output directory");
    app.add_option("--config", g.config, "Experiment config JSON");

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic survival dataset");
    deepcox::SimulationSpec spec;
    std::string risk = "linear";
    simulate->add_option("--n", spec.n, "Number of patients")->required();
    simulate->add_option("--d", spec.d, "Number of covariates");
    simulate->add_option("--risk", risk, "Risk function")->check(CLI::IsMember({"linear", "gaussian"}));
    simulate->add_option("--lambda-max", spec.lambda_max, "Gaussian risk amplitude");
    simulate->add_option("--r", spec.r, "Gaussian risk scale");
    simulate->add_option("--mean-u", spec.mean_u, "Mean of the baseline exponential draw");
    simulate->add_option("--observed-fraction", spec.observed_fraction, "Fraction of events observed");
    simulate->add_flag("--treatment", spec.with_treatment, "Add a Bernoulli(0.5) treatment arm");

    DataOptions train_data, search_data, rec_data, km_data;
    auto* train = app.add_subcommand("train", "Fit a model and report test-set metrics");
    add_data_options(train, train_data);

    auto* search = app.add_subcommand("search", "Random hyper-parameter search with k-fold cross-validation");
    add_data_options(search, search_data);
    int trials = 20, folds = 3, threads = 1;
    search->add_option("--trials", trials, "Number of sampled configurations")->check(CLI::PositiveNumber);
    search->add_option("--k", folds, "Number of folds")->check(CLI::Range(2, 1000));
    search->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* recommend = app.add_subcommand("recommend", "Treatment recommendations on the test split");
    add_data_options(recommend, rec_data);
    std::string rec_model;
    recommend->add_option("--model-file", rec_model, "Trained model JSON; trains from the config when absent");

    auto* km = app.add_subcommand("km", "Kaplan-Meier curves");
    add_data_options(km, km_data);
    std::string group_by = "none", part = "all", km_model;
    km->add_option("--group-by", group_by, "Grouping")->check(CLI::IsMember({"none", "treatment", "subset"}));
    km->add_option("--part", part, "Dataset part")->check(CLI::IsMember({"all", "train", "validation", "test"}));
    km->add_option("--model-file", km_model, "Trained model JSON for --group-by subset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto optional_path = [](const std::string& p) {
        return p.empty() ? std::nullopt : std::optional<std::filesystem::path>(p);
    };

    try {
        if (*simulate) {
            spec.risk_kind = deepcox::risk_kind_from_string(risk);
            spec.seed = g.seed.value_or(0);
            try {
                spec.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            deepcox::command_simulate({spec, g.out_dir.value_or("out")});
        } else if (*train) {
            deepcox::command_train(resolve_config(g, train_data));
        } else if (*search) {
            deepcox::command_search(resolve_config(g, search_data), trials, folds, threads);
        } else if (*recommend) {
            deepcox::command_recommend(resolve_config(g, rec_data), optional_path(rec_model));
        } else if (*km) {
            deepcox::command_km(resolve_config(g, km_data), deepcox::km_grouping_from_string(group_by),
                                deepcox::split_part_from_string(part), optional_path(km_model));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const deepcox::TrainingDivergedError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
