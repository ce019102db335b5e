#include "deepcox/data.hpp"

#include "deepcox/errors.hpp"
#include "deepcox/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace deepcox {

SurvivalDataset::SurvivalDataset(Matrix covariates, Vector times, std::vector<int> events,
                                 std::optional<std::vector<int>> treatments,
                                 std::vector<std::string> feature_names)
    : covariates_(std::move(covariates)),
      times_(std::move(times)),
      events_(std::move(events)),
      treatments_(std::move(treatments)),
      feature_names_(std::move(feature_names)) {
    const auto n = times_.size();
    if (n < 1) throw std::invalid_argument("dataset needs at least one patient");
    if (covariates_.cols() < 1) throw std::invalid_argument("dataset needs at least one feature");
    if (covariates_.rows() != n || static_cast<Eigen::Index>(events_.size()) != n) {
        throw std::invalid_argument("covariates, times and events disagree on patient count");
    }
    if (!covariates_.allFinite()) throw std::invalid_argument("covariates contain non-finite values");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(times_[i]) || times_[i] <= 0.0) {
            throw std::invalid_argument("time of patient " + std::to_string(i) +
                                        " is not strictly positive and finite");
        }
        if (events_[i] != 0 && events_[i] != 1) {
            throw std::invalid_argument("event of patient " + std::to_string(i) + " is not 0 or 1");
        }
    }
    if (treatments_) {
        if (static_cast<Eigen::Index>(treatments_->size()) != n) {
            throw std::invalid_argument("treatments disagree on patient count");
        }
        for (int t : *treatments_) {
            if (t < 0) throw std::invalid_argument("treatment labels must be non-negative");
        }
    }
    if (feature_names_.empty()) {
        for (Eigen::Index j = 0; j < covariates_.cols(); ++j) {
            feature_names_.push_back("x" + std::to_string(j));
        }
    } else if (static_cast<Eigen::Index>(feature_names_.size()) != covariates_.cols()) {
        throw std::invalid_argument("feature name count does not match covariate columns");
    }
}

std::size_t SurvivalDataset::num_events() const noexcept {
    return static_cast<std::size_t>(std::count(events_.begin(), events_.end(), 1));
}

SurvivalDataset SurvivalDataset::subset(const std::vector<std::size_t>& indices) const {
    const auto m = static_cast<Eigen::Index>(indices.size());
    Matrix x(m, covariates_.cols());
    Vector t(m);
    std::vector<int> e(indices.size());
    std::optional<std::vector<int>> tr;
    if (treatments_) tr.emplace(indices.size());
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto i = static_cast<Eigen::Index>(indices[k]);
        if (i >= covariates_.rows()) throw std::out_of_range("subset index out of range");
        x.row(k) = covariates_.row(i);
        t[k] = times_[i];
        e[k] = events_[i];
        if (tr) (*tr)[k] = (*treatments_)[i];
    }
    return SurvivalDataset(std::move(x), std::move(t), std::move(e), std::move(tr), feature_names_);
}

SurvivalDataset SurvivalDataset::with_covariates(Matrix covariates) const {
    auto names = covariates.cols() == covariates_.cols() ? feature_names_ : std::vector<std::string>{};
    return SurvivalDataset(std::move(covariates), times_, events_, treatments_, std::move(names));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.emplace_back(trim(current));
    return fields;
}

double parse_number(std::string_view cell, std::size_t row, const std::string& column) {
    if (cell.empty()) throw ParseError(row, "missing value in column '" + column + "'");
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ParseError(row, "non-numeric value '" + std::string(cell) + "' in column '" + column + "'");
    }
    if (!std::isfinite(value)) throw ParseError(row, "non-finite value in column '" + column + "'");
    return value;
}

} // namespace

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

SurvivalDataset parse_csv(const std::string& text, const CsvSchema& schema) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    // Lines starting with '#' carry provenance comments and are skipped.
    auto skip = [](std::string_view l) {
        const auto t = trim(l);
        return t.empty() || t.front() == '#';
    };
    while (std::getline(in, line)) {
        if (!skip(line)) {
            header = split_fields(line);
            break;
        }
    }
    if (header.empty()) throw SchemaError(schema.time_column);
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

    auto find_column = [&](const std::string& name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : std::distance(header.begin(), it);
    };
    const auto time_col = find_column(schema.time_column);
    if (time_col < 0) throw SchemaError(schema.time_column);
    const auto event_col = find_column(schema.event_column);
    if (event_col < 0) throw SchemaError(schema.event_column);
    std::ptrdiff_t treat_col = -1;
    if (!schema.treatment_column.empty()) {
        treat_col = find_column(schema.treatment_column);
        if (treat_col < 0) throw SchemaError(schema.treatment_column);
    }

    std::vector<std::size_t> feature_cols;
    std::vector<std::string> feature_names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto sc = static_cast<std::ptrdiff_t>(c);
        if (sc == time_col || sc == event_col || sc == treat_col) continue;
        feature_cols.push_back(c);
        feature_names.push_back(header[c]);
    }
    if (feature_cols.empty()) throw std::invalid_argument("CSV has no feature columns");

    std::vector<double> x, t;
    std::vector<int> e, tr;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (skip(line)) continue;
        ++row;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError(row, "expected " + std::to_string(header.size()) + " cells, found " +
                                      std::to_string(fields.size()));
        }
        for (std::size_t c : feature_cols) x.push_back(parse_number(fields[c], row, header[c]));
        const double time = parse_number(fields[time_col], row, schema.time_column);
        if (time <= 0.0) throw ParseError(row, "time must be strictly positive");
        t.push_back(time);
        const double event = parse_number(fields[event_col], row, schema.event_column);
        if (event != 0.0 && event != 1.0) throw ParseError(row, "event must be 0 or 1");
        e.push_back(static_cast<int>(event));
        if (treat_col >= 0) {
            const double label = parse_number(fields[treat_col], row, schema.treatment_column);
            if (label < 0.0 || label != std::floor(label)) {
                throw ParseError(row, "treatment must be a non-negative integer label");
            }
            tr.push_back(static_cast<int>(label));
        }
    }
    if (row == 0) throw std::invalid_argument("CSV has no data rows");

    const auto n = static_cast<Eigen::Index>(row);
    const auto d = static_cast<Eigen::Index>(feature_cols.size());
    Matrix covariates = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        x.data(), n, d);
    Vector times = Eigen::Map<const Vector>(t.data(), n);
    std::optional<std::vector<int>> treatments;
    if (treat_col >= 0) treatments = std::move(tr);
    return SurvivalDataset(std::move(covariates), std::move(times), std::move(e), std::move(treatments),
                           std::move(feature_names));
}

SurvivalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), schema);
}

std::string to_csv(const SurvivalDataset& ds, const CsvSchema& schema, const std::string& comment) {
    const std::string treatment_column =
        schema.treatment_column.empty() ? std::string("treatment") : schema.treatment_column;
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    for (const auto& name : ds.feature_names()) out += name + ",";
    out += schema.time_column + "," + schema.event_column;
    if (ds.has_treatments()) out += "," + treatment_column;
    out += "\n";
    const auto& x = ds.covariates();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) out += format_number(x(i, j)) + ",";
        out += format_number(ds.times()[i]) + "," + std::to_string(ds.events()[i]);
        if (ds.has_treatments()) out += "," + std::to_string((*ds.treatments())[i]);
        out += "\n";
    }
    return out;
}

void write_csv(const SurvivalDataset& ds, const std::filesystem::path& path, const CsvSchema& schema,
               const std::string& comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_csv(ds, schema, comment);
}

// ---------------------------------------------------------------------------
// Splitting

SplitIndices split_indices(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed) {
    for (double f : fractions) {
        if (!(f > 0.0)) throw std::invalid_argument("split fractions must be strictly positive");
    }
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must sum to 1");
    }
    const auto n_val = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::llround(fractions[2] * static_cast<double>(n)));
    if (n_val + n_test >= n) throw std::invalid_argument("dataset too small for the requested split");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    SplitIndices out;
    const auto n_train = n - n_val - n_test;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    return out;
}

DatasetSplit split(const SurvivalDataset& ds, const std::array<double, 3>& fractions, std::uint64_t seed) {
    auto indices = split_indices(ds.size(), fractions, seed);
    return DatasetSplit{ds.subset(indices.train), ds.subset(indices.validation), ds.subset(indices.test),
                        std::move(indices)};
}

// ---------------------------------------------------------------------------
// Standardization

bool StandardizationParams::has_constant_feature() const {
    return std::find(constant.begin(), constant.end(), true) != constant.end();
}

StandardizationParams standardize_fit(const SurvivalDataset& ds) {
    const auto& x = ds.covariates();
    const auto n = static_cast<double>(x.rows());
    StandardizationParams params;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        const bool flat = !(sd > 0.0);
        params.means.push_back(mean);
        params.stddevs.push_back(flat ? 1.0 : sd);
        params.constant.push_back(flat);
    }
    return params;
}

SurvivalDataset standardize_apply(const SurvivalDataset& ds, const StandardizationParams& params) {
    const auto d = ds.num_features();
    if (params.means.size() != d || params.stddevs.size() != d) {
        throw std::invalid_argument("standardization parameters do not match feature count");
    }
    Matrix x = ds.covariates();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        x.col(j) = (x.col(j).array() - params.means[j]) / params.stddevs[j];
    }
    return ds.with_covariates(std::move(x));
}

// ---------------------------------------------------------------------------

SortedSurvivalView sort_view(const Vector& times) {
    const auto n = static_cast<std::size_t>(times.size());
    SortedSurvivalView view;
    view.permutation.resize(n);
    std::iota(view.permutation.begin(), view.permutation.end(), std::size_t{0});
    std::stable_sort(view.permutation.begin(), view.permutation.end(),
                     [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });
    view.group_of.resize(n);
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin + 1;
        while (end < n && times[view.permutation[end]] == times[view.permutation[begin]]) ++end;
        for (std::size_t k = begin; k < end; ++k) view.group_of[k] = view.tie_groups.size();
        view.tie_groups.push_back({begin, end});
        begin = end;
    }
    return view;
}

Matrix design_matrix(const SurvivalDataset& ds, bool include_treatment) {
    if (!include_treatment || !ds.has_treatments()) return ds.covariates();
    Matrix x(ds.covariates().rows(), ds.covariates().cols() + 1);
    x.leftCols(ds.covariates().cols()) = ds.covariates();
    const auto& tr = *ds.treatments();
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, x.cols() - 1) = static_cast<double>(tr[i]);
    return x;
}

} // namespace deepcox
