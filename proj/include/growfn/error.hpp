#pragma once

#include <stdexcept>
#include <string>

namespace growfn {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (ragged rows, missing columns).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A cell that is neither numeric nor a missing token.
class ParseError : public FormatError {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : FormatError(what + " at row " + std::to_string(row) + ", column " + std::to_string(column)),
          row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// Argument outside its documented domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A series that cannot be standardized (fewer than two observations or zero spread).
class DegenerateSeriesError : public ParameterError {
public:
    DegenerateSeriesError(const std::string& series, const std::string& why)
        : ParameterError("degenerate series '" + series + "': " + why), series_(series) {}

    const std::string& series() const noexcept { return series_; }

private:
    std::string series_;
};

/// Test set too small or too flat to normalize an error by its variance.
class DegenerateVarianceError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// Floating point failure: failed factorization, overflow, runaway slice expansion.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Every candidate in a categorical draw had zero probability.
class DegenerateLikelihoodError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace growfn
