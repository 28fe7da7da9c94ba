#pragma once

// Numeric tables and their CSV form. Values are written with %.17g so a parse of the file
// reproduces every double bit for bit; NaN is written as "nan".

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spade::cli {

struct Table {
    std::string name; // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) {
        if (row.size() != columns.size()) throw std::logic_error("Table: row width does not match header");
        rows.push_back(std::move(row));
    }

    [[nodiscard]] std::size_t column(const std::string& col) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == col) return i;
        }
        throw std::out_of_range("Table " + name + ": no column " + col);
    }

    [[nodiscard]] double at(std::size_t row, const std::string& col) const { return rows.at(row).at(column(col)); }
};

[[nodiscard]] inline std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[nodiscard]] inline std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out += ',';
        out += t.columns[i];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_value(row[i]);
        }
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace detail

[[nodiscard]] inline Table parse_csv(const std::string& text, const std::string& name = {}) {
    Table t;
    t.name = name;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("CSV: missing header");
    t.columns = detail::split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = detail::split(line);
        if (cells.size() != t.columns.size()) {
            throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": wrong number of cells");
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end != c.c_str() + c.size()) {
                throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": bad number '" + c + "'");
            }
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

[[nodiscard]] inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace spade::cli
