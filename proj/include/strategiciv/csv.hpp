#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "strategiciv/errors.hpp"

namespace strategiciv {

/// Shortest decimal form that round-trips the exact double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, long line_no) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw ParseError("line " + std::to_string(line_no) + ": expected a number, got '" +
                         std::string(text) + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

/// In-memory CSV table.  Cells are kept as the exact strings written to
/// (or read from) disk, so a write/read cycle is the identity and any
/// rendering derived from a table is reproducible from its CSV form.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ParseError("table has no column '" + std::string(name) + "'");
    }

    std::vector<double> numeric_column(std::string_view name) const {
        std::size_t c = column_index(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            out.push_back(parse_double(rows[r][c], static_cast<long>(r) + 2));
        return out;
    }

    void add_row(std::vector<std::string> row) {
        if (row.size() != columns.size())
            throw ValidationError("row has " + std::to_string(row.size()) + " cells, table has " +
                                  std::to_string(columns.size()) + " columns");
        rows.push_back(std::move(row));
    }
};

inline void write_csv(const Table& table, std::ostream& out) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ',';
        out << table.columns[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
}

inline void write_csv(const Table& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_csv(table, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline Table read_csv(std::istream& in) {
    Table table;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            table.columns = split_csv_line(line);
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != table.columns.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.columns.size()) + " fields, got " +
                             std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
    }
    if (line_no == 0) throw ParseError("line 1: empty input, expected a header");
    return table;
}

inline Table read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_csv(in);
}

}  // namespace strategiciv
