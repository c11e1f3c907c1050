#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "error.hpp"

namespace hybridfx::csv {

/// 17 significant digits; parses back bit-exactly.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

/// Parses a finite decimal number; anything else (including nan/inf) is rejected.
inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        const auto cell = line.substr(start, pos == std::string_view::npos ? line.npos : pos - start);
        cells.emplace_back(trim(cell));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

struct Table {
    std::string path;
    std::optional<std::vector<std::string>> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based, parallel to rows
};

/// A first row is a header when it holds a non-numeric cell where data would
/// be numeric: any non-empty cell past the first column, or the only cell of
/// a single-column file. Column 0 may hold opaque labels such as dates.
inline bool looks_like_header(const std::vector<std::string>& cells) {
    if (cells.size() == 1) return !parse_double(cells[0]).has_value();
    for (std::size_t i = 1; i < cells.size(); ++i)
        if (!cells[i].empty() && !parse_double(cells[i])) return true;
    return false;
}

inline Table read_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError(path, 0, "cannot open file");
    Table table;
    table.path = path;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (first && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
        if (trim(view).empty()) continue;
        auto cells = split_line(view);
        if (first) {
            first = false;
            if (looks_like_header(cells)) {
                table.header = std::move(cells);
                continue;
            }
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

/// Writes rows of already-formatted cells.
inline void write_lines(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CsvError(path, 0, "cannot open file for writing");
    out << content;
    if (!out) throw CsvError(path, 0, "write failed");
}

}  // namespace hybridfx::csv
