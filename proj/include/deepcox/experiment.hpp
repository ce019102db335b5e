#pragma once

#include "deepcox/coxlinear.hpp"
#include "deepcox/data.hpp"
#include "deepcox/optim.hpp"
#include "deepcox/recommend.hpp"
#include "deepcox/serialization.hpp"
#include "deepcox/simulate.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace deepcox {

inline constexpr int kSchemaVersion = 1;

/// Malformed or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { linear_cph, deep_cox };

struct CsvSource {
    std::filesystem::path path;
    CsvSchema schema;
    /// Optional sidecar with a true_risk column aligned to the dataset rows.
    std::filesystem::path true_risk_path;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::optional<SimulationSpec> simulation;
    std::optional<CsvSource> csv;
    std::array<double, 3> split_fractions{0.6, 0.2, 0.2};
    std::optional<std::uint64_t> split_seed;
    bool standardize = true;
    /// Feed the treatment label to the model as a trailing input column.
    bool treatment_as_feature = true;
    ModelKind model = ModelKind::deep_cox;
    NetworkConfig network;
    /// optimizer.seed is ignored; the resolved optimizer seed replaces it.
    OptimizerConfig optimizer;
    std::optional<std::uint64_t> optimizer_seed;
    CoxFitOptions cph;
    int bootstrap_replicates = 200;
    double alpha = 0.05;
    std::optional<std::uint64_t> evaluation_seed;
    std::optional<SearchSpace> search_space;
    std::filesystem::path output_dir = "out";

    std::uint64_t resolved_split_seed() const;
    std::uint64_t resolved_optimizer_seed() const;
    std::uint64_t resolved_evaluation_seed() const;
    std::uint64_t resolved_simulation_seed() const;
};

/// Throws ConfigError on schema violations.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Fully resolved config; seeds are written out explicitly.
Json to_json(const ExperimentConfig& config);

/// 16 hex digits of FNV-1a over the canonical config JSON, output_dir excluded.
std::string config_hash(const ExperimentConfig& config);
Json provenance(const ExperimentConfig& config, const std::string& command);

/// Data after loading, splitting and standardizing. The split datasets carry
/// model inputs: standardized covariates, then the treatment column if used.
struct PreparedData {
    SurvivalDataset full;
    DatasetSplit split;
    SurvivalDataset train, validation, test;
    StandardizationParams standardization;
    std::optional<Vector> true_risks;
    std::optional<double> censor_time;
    std::optional<std::size_t> treatment_index;
};

PreparedData prepare_data(const ExperimentConfig& config);

struct FitResult {
    RiskModel model;
    std::optional<TrainingHistory> history;
};

FitResult fit_model(const ExperimentConfig& config, const PreparedData& data);

/// Test-set C-index with bootstrap interval, plus centred risk MSE when the
/// true risks are known.
Json evaluate_model(const ExperimentConfig& config, const PreparedData& data, const RiskModel& model);

struct ExperimentOutcome {
    PreparedData data;
    FitResult fit;
    Json metrics;
};

ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// The Table-3 style hyper-parameters used for the simulated experiments.
ExperimentConfig simulated_linear_config(std::uint64_t seed = 1);
ExperimentConfig simulated_nonlinear_config(std::uint64_t seed = 1);
ExperimentConfig simulated_treatment_config(std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Command drivers. Each writes its artifacts under config.output_dir.

struct SimulateOptions {
    SimulationSpec spec;
    std::filesystem::path output_dir = "out";
};

void command_simulate(const SimulateOptions& options);
void command_train(const ExperimentConfig& config);
void command_search(const ExperimentConfig& config, int trials, int k, int threads);
void command_recommend(const ExperimentConfig& config, const std::optional<std::filesystem::path>& model_path);

enum class KmGrouping { none, treatment, subset };
enum class SplitPart { all, train, validation, test };

KmGrouping km_grouping_from_string(const std::string& name);
SplitPart split_part_from_string(const std::string& name);

void command_km(const ExperimentConfig& config, KmGrouping grouping, SplitPart part,
                const std::optional<std::filesystem::path>& model_path);

/// KM curve as CSV rows: group,time,survival,ci_lower,ci_upper,at_risk,deaths.
std::string km_csv_rows(const std::string& group, const KaplanMeierCurve& curve);

} // namespace deepcox
