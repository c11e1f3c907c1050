#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "error.hpp"
#include "matrix.hpp"

namespace hybridfx {

/// Scalar return series X_k. At least two finite values.
class ReturnSeries {
public:
    explicit ReturnSeries(std::vector<double> values, std::string label = {},
                          std::vector<std::string> row_labels = {})
        : values_(std::move(values)), label_(std::move(label)), row_labels_(std::move(row_labels)) {
        if (values_.size() < 2) throw DataError("return series: fewer than 2 rows");
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw DataError("return series: non-finite value at index " + std::to_string(i));
        if (!row_labels_.empty() && row_labels_.size() != values_.size())
            throw DataError("return series: row label count mismatch");
    }

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::string& label() const noexcept { return label_; }
    /// Opaque per-row labels (e.g. dates) carried from the input file; may be empty.
    const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }

    /// Drops the first `count` values; the remainder must still hold two.
    ReturnSeries drop_front(std::size_t count) const {
        if (count >= values_.size()) throw DataError("return series: burn-in consumes the whole series");
        std::vector<std::string> labels;
        if (!row_labels_.empty()) labels.assign(row_labels_.begin() + count, row_labels_.end());
        return ReturnSeries({values_.begin() + count, values_.end()}, label_, std::move(labels));
    }

    friend bool operator==(const ReturnSeries&, const ReturnSeries&) = default;

private:
    std::vector<double> values_;
    std::string label_;
    std::vector<std::string> row_labels_;
};

/// T x m matrix of ATM implied volatilities, one column per term.
class VolTermPath {
public:
    VolTermPath(Matrix values, std::vector<std::string> term_labels = {},
                std::vector<std::string> row_labels = {})
        : values_(std::move(values)), term_labels_(std::move(term_labels)),
          row_labels_(std::move(row_labels)) {
        if (values_.cols() < 1) throw DataError("vol path: no term columns");
        if (values_.rows() < 2) throw DataError("vol path: fewer than 2 rows");
        for (std::size_t r = 0; r < values_.rows(); ++r)
            for (double v : values_.row(r))
                if (!(v > 0.0) || !std::isfinite(v))
                    throw DataError("vol path: nonpositive volatility at row " + std::to_string(r + 1));
        if (term_labels_.empty())
            for (std::size_t j = 0; j < values_.cols(); ++j)
                term_labels_.push_back("term" + std::to_string(j + 1));
        if (term_labels_.size() != values_.cols()) throw DataError("vol path: term label count mismatch");
        if (!row_labels_.empty() && row_labels_.size() != values_.rows())
            throw DataError("vol path: row label count mismatch");
    }

    const Matrix& values() const noexcept { return values_; }
    std::size_t steps() const noexcept { return values_.rows(); }
    std::size_t terms() const noexcept { return values_.cols(); }
    const std::vector<std::string>& term_labels() const noexcept { return term_labels_; }
    const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }

    friend bool operator==(const VolTermPath&, const VolTermPath&) = default;

private:
    Matrix values_;
    std::vector<std::string> term_labels_;
    std::vector<std::string> row_labels_;
};

/// Per-step increments of the vol levels, one row per step.
class IncrementSeries {
public:
    explicit IncrementSeries(Matrix values) : values_(std::move(values)) {}

    const Matrix& values() const noexcept { return values_; }
    std::size_t steps() const noexcept { return values_.rows(); }
    std::size_t terms() const noexcept { return values_.cols(); }
    std::span<const double> row(std::size_t k) const { return values_.row(k); }

    friend bool operator==(const IncrementSeries&, const IncrementSeries&) = default;

private:
    Matrix values_;
};

inline IncrementSeries increments(const VolTermPath& path) {
    const Matrix& y = path.values();
    Matrix out(y.rows() - 1, y.cols());
    for (std::size_t k = 1; k < y.rows(); ++k)
        for (std::size_t j = 0; j < y.cols(); ++j) out(k - 1, j) = y(k, j) - y(k - 1, j);
    return IncrementSeries(std::move(out));
}

/// Rebuilds levels from a starting row by running sums of the increments.
inline Matrix cumulate(std::span<const double> first_row, const IncrementSeries& incs) {
    if (first_row.size() != incs.terms()) throw DataError("cumulate: width mismatch");
    Matrix out(incs.steps() + 1, incs.terms());
    std::copy(first_row.begin(), first_row.end(), out.row(0).begin());
    for (std::size_t k = 0; k < incs.steps(); ++k)
        for (std::size_t j = 0; j < incs.terms(); ++j) out(k + 1, j) = out(k, j) + incs.values()(k, j);
    return out;
}

inline ReturnSeries prices_to_returns(std::span<const double> prices, std::string label = {}) {
    if (prices.size() < 3) throw DataError("prices_to_returns: need at least 3 prices");
    std::vector<double> out;
    out.reserve(prices.size() - 1);
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0)) throw DataError("prices_to_returns: nonpositive price at index " + std::to_string(i));
        if (i > 0) out.push_back(std::log(prices[i] / prices[i - 1]));
    }
    return ReturnSeries(std::move(out), std::move(label));
}

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline bool is_label_column_name(const std::string& name) {
    const auto n = lower(name);
    return n == "date" || n == "time" || n == "timestamp" || n == "k" || n == "t" || n == "index";
}

inline bool is_return_column_name(const std::string& name) {
    const auto n = lower(name);
    return n == "x_k" || n == "x" || n == "ret" || n == "return" || n == "returns" || n == "value";
}

}  // namespace detail

/// Loads a return series from CSV.
///
/// Column choice: `column` if given (by header name); otherwise a header
/// column named X_k/x/ret/return/returns/value; otherwise the single column
/// of a one-column file, or column 1 of a two-column file whose column 0
/// holds labels (dates or an index).
inline ReturnSeries load_returns_csv(const std::string& path, std::optional<std::string> column = {}) {
    const auto table = csv::read_table(path);
    if (table.rows.size() < 2) throw CsvError(path, 0, "fewer than 2 rows");
    const std::size_t width = table.header ? table.header->size() : table.rows.front().size();

    std::optional<std::size_t> col;
    if (column) {
        if (!table.header) throw CsvError(path, 0, "column '" + *column + "' requested but file has no header");
        for (std::size_t i = 0; i < table.header->size(); ++i)
            if ((*table.header)[i] == *column) col = i;
        if (!col) throw CsvError(path, 0, "no column named '" + *column + "'");
    } else if (table.header) {
        for (std::size_t i = 0; i < table.header->size() && !col; ++i)
            if (detail::is_return_column_name((*table.header)[i])) col = i;
    }
    if (!col) {
        if (width == 1) col = 0;
        else if (width == 2) col = 1;
        else throw CsvError(path, 0, "cannot tell which of " + std::to_string(width) +
                                         " columns holds returns; name it X_k or pass a column name");
    }
    const bool has_labels = *col == 1 && width == 2;

    std::vector<double> values;
    std::vector<std::string> labels;
    values.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        if (*col >= cells.size()) throw CsvError(path, table.line_numbers[r], "missing value column");
        const auto v = csv::parse_double(cells[*col]);
        if (!v) throw CsvError(path, table.line_numbers[r], "non-numeric cell '" + cells[*col] + "'");
        values.push_back(*v);
        if (has_labels) labels.push_back(cells[0]);
    }
    std::string label = table.header ? (*table.header)[*col] : path;
    return ReturnSeries(std::move(values), std::move(label), std::move(labels));
}

/// Loads an implied-vol term structure from CSV. Values are divided by
/// `scale` (100 for quotes in percent).
inline VolTermPath load_vols_csv(const std::string& path, double scale = 1.0) {
    if (!(scale > 0.0)) throw DataError("load_vols_csv: scale must be positive");
    const auto table = csv::read_table(path);
    if (table.rows.size() < 2) throw CsvError(path, 0, "fewer than 2 rows");

    bool has_labels = !csv::parse_double(table.rows.front()[0]).has_value();
    if (table.header && !table.header->empty() && detail::is_label_column_name(table.header->front()))
        has_labels = true;
    const std::size_t first = has_labels ? 1 : 0;
    const std::size_t width = table.rows.front().size();
    if (width <= first) throw CsvError(path, table.line_numbers.front(), "no volatility columns");
    const std::size_t m = width - first;

    Matrix values(0, 0);
    values.reserve_rows(table.rows.size());
    std::vector<std::string> row_labels;
    std::vector<double> row(m);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const auto line = table.line_numbers[r];
        if (cells.size() != width)
            throw CsvError(path, line, "ragged row: expected " + std::to_string(width) + " cells, got " +
                                           std::to_string(cells.size()));
        for (std::size_t j = 0; j < m; ++j) {
            const auto v = csv::parse_double(cells[first + j]);
            if (!v) throw CsvError(path, line, "non-numeric cell '" + cells[first + j] + "'");
            if (!(*v > 0.0)) throw CsvError(path, line, "nonpositive volatility");
            row[j] = *v / scale;
        }
        values.push_row(row);
        if (has_labels) row_labels.push_back(cells[0]);
    }
    std::vector<std::string> terms;
    if (table.header && table.header->size() == width)
        terms.assign(table.header->begin() + static_cast<std::ptrdiff_t>(first), table.header->end());
    return VolTermPath(std::move(values), std::move(terms), std::move(row_labels));
}

inline void write_returns_csv(const std::string& path, const ReturnSeries& series) {
    std::string out;
    const bool labels = !series.row_labels().empty();
    out += labels ? "date,value\n" : "value\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (labels) out += series.row_labels()[i] + ",";
        out += csv::format_double(series[i]);
        out += '\n';
    }
    csv::write_lines(path, out);
}

inline void write_vols_csv(const std::string& path, const VolTermPath& vols, double scale = 1.0) {
    std::string out;
    const bool labels = !vols.row_labels().empty();
    if (labels) out += "date,";
    for (std::size_t j = 0; j < vols.terms(); ++j) {
        if (j) out += ',';
        out += vols.term_labels()[j];
    }
    out += '\n';
    for (std::size_t r = 0; r < vols.steps(); ++r) {
        if (labels) out += vols.row_labels()[r] + ",";
        for (std::size_t j = 0; j < vols.terms(); ++j) {
            if (j) out += ',';
            out += csv::format_double(vols.values()(r, j) * scale);
        }
        out += '\n';
    }
    csv::write_lines(path, out);
}

}  // namespace hybridfx
