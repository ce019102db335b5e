#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deepcox {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Right-censored survival data: one row of covariates per patient, the
/// observed time min(T, T0), the event flag, and an optional treatment group.
class SurvivalDataset {
public:
    SurvivalDataset() = default;

    /// Validates every invariant; throws std::invalid_argument on violation.
    SurvivalDataset(Matrix covariates, Vector times, std::vector<int> events,
                    std::optional<std::vector<int>> treatments = std::nullopt,
                    std::vector<std::string> feature_names = {});

    const Matrix& covariates() const noexcept { return covariates_; }
    const Vector& times() const noexcept { return times_; }
    const std::vector<int>& events() const noexcept { return events_; }
    const std::optional<std::vector<int>>& treatments() const noexcept { return treatments_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    std::size_t size() const noexcept { return static_cast<std::size_t>(times_.size()); }
    std::size_t num_features() const noexcept { return static_cast<std::size_t>(covariates_.cols()); }
    std::size_t num_events() const noexcept;
    bool has_treatments() const noexcept { return treatments_.has_value(); }

    /// Rows selected by `indices`, in that order.
    SurvivalDataset subset(const std::vector<std::size_t>& indices) const;

    /// Same outcomes with replaced covariates (same row count).
    SurvivalDataset with_covariates(Matrix covariates) const;

private:
    Matrix covariates_;
    Vector times_;
    std::vector<int> events_;
    std::optional<std::vector<int>> treatments_;
    std::vector<std::string> feature_names_;
};

struct CsvSchema {
    std::string time_column = "time";
    std::string event_column = "event";
    /// Empty means the file carries no treatment column.
    std::string treatment_column;
};

/// Reads a header-led CSV; every column not named by the schema is a feature.
/// Throws SchemaError for a missing column and ParseError (with the 1-based
/// data row) for any invalid cell.
SurvivalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
SurvivalDataset parse_csv(const std::string& text, const CsvSchema& schema = {});

/// Writes features first, then time, event and (if present) treatment. A
/// non-empty `comment` is emitted as a leading '#' line.
void write_csv(const SurvivalDataset& ds, const std::filesystem::path& path,
               const CsvSchema& schema = {}, const std::string& comment = {});
std::string to_csv(const SurvivalDataset& ds, const CsvSchema& schema = {}, const std::string& comment = {});

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

struct SplitIndices {
    std::vector<std::size_t> train, validation, test;
};

struct DatasetSplit {
    SurvivalDataset train, validation, test;
    SplitIndices indices;
};

/// Seeded shuffle then cut by fraction. Validation and test sizes are rounded,
/// training takes the remainder.
DatasetSplit split(const SurvivalDataset& ds, const std::array<double, 3>& fractions,
                   std::uint64_t seed);
SplitIndices split_indices(std::size_t n, const std::array<double, 3>& fractions,
                           std::uint64_t seed);

struct StandardizationParams {
    std::vector<double> means;
    std::vector<double> stddevs;
    /// Features whose variance was zero; they are centred but not scaled.
    std::vector<bool> constant;

    bool has_constant_feature() const;
};

/// Population (n-denominator) moments of each feature column.
StandardizationParams standardize_fit(const SurvivalDataset& ds);
SurvivalDataset standardize_apply(const SurvivalDataset& ds, const StandardizationParams& params);

/// Patients ordered by descending time. Every risk set R(t) is then the
/// prefix ending at the last member of the tie group containing t.
struct SortedSurvivalView {
    struct TieGroup {
        std::size_t begin;
        std::size_t end;  // one past the last sorted position
    };
    std::vector<std::size_t> permutation;
    std::vector<TieGroup> tie_groups;
    /// group_of[k] is the tie group of sorted position k.
    std::vector<std::size_t> group_of;

    std::size_t size() const noexcept { return permutation.size(); }
};

SortedSurvivalView sort_view(const Vector& times);
inline SortedSurvivalView sort_view(const SurvivalDataset& ds) { return sort_view(ds.times()); }

/// Model inputs: the covariates, plus the treatment label as a trailing
/// column when requested and available.
Matrix design_matrix(const SurvivalDataset& ds, bool include_treatment);

} // namespace deepcox
