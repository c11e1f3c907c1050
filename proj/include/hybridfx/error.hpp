#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hybridfx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data (files, series, parameters).
class DataError : public Error {
public:
    using Error::Error;
};

/// Input file could not be opened or parsed. `row` is the 1-based line
/// number in the file, or 0 when the error is not tied to a line.
class CsvError : public DataError {
public:
    CsvError(const std::string& path, std::size_t row, const std::string& what)
        : DataError(row == 0 ? path + ": " + what
                             : path + ":" + std::to_string(row) + ": " + what),
          path_(path), row_(row) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t row() const noexcept { return row_; }

private:
    std::string path_;
    std::size_t row_;
};

/// A matrix that had to be positive definite was not.
///
/// `pivot` is the 1-based Cholesky pivot that failed (0 if the failure was
/// detected another way); `min_eigenvalue` is an estimate of the smallest
/// eigenvalue of the offending matrix, which callers can use to pick a ridge.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(const std::string& what, std::size_t pivot, double min_eigenvalue)
        : Error(what), pivot_(pivot), min_eigenvalue_(min_eigenvalue) {}

    std::size_t pivot() const noexcept { return pivot_; }
    double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    std::size_t pivot_;
    double min_eigenvalue_;
};

}  // namespace hybridfx
