#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deepcox {

/// A required CSV column is absent.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& column)
        : std::runtime_error("missing column '" + column + "'"), column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// A CSV cell failed validation. Rows are 1-based data rows (header excluded).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t row, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Partial likelihood requested on data without a single observed event.
class NoEventsError : public std::runtime_error {
public:
    explicit NoEventsError(const std::string& what = "no observed events")
        : std::runtime_error(what) {}
};

class SingularHessianError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class TrainingDivergedError : public std::runtime_error {
public:
    TrainingDivergedError(int epoch, const std::string& what)
        : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

} // namespace deepcox
