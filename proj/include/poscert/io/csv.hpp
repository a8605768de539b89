#pragma once

#include "poscert/error.hpp"
#include "poscert/lattice.hpp"
#include "poscert/solver.hpp"

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace poscert::io {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw StructuralError("not a number: '" + std::string(s) + "'");
    return v;
}

/// Trajectory columns: every coordinate, or one norm per component.
enum class CsvColumns { state, component_norms };

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == name) return c;
        throw StructuralError("no column named '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> trajectory_columns(const SpaceSpec& space, CsvColumns mode) {
    std::vector<std::string> cols{"t"};
    if (mode == CsvColumns::state) {
        for (auto& l : space.coordinate_labels()) cols.push_back(std::move(l));
    } else {
        for (std::size_t c = 0; c < space.component_count(); ++c) cols.push_back("|" + space.label(c) + "|");
    }
    return cols;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const SpaceSpec& space, const Trajectory& tr,
                                 CsvColumns mode = CsvColumns::state) {
    write_row(os, trajectory_columns(space, mode));
    std::string line;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        line = format_double(tr.times[k]);
        const auto& y = tr.states[k];
        if (mode == CsvColumns::state) {
            for (double v : y) (line += ',') += format_double(v);
        } else {
            for (std::size_t c = 0; c < space.component_count(); ++c)
                (line += ',') += format_double(component_norm(space, y, c));
        }
        line += '\n';
        os << line;
    }
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Header row plus numeric rows of equal width; at least one data row.
inline Table read_csv(std::istream& is) {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (t.columns.empty()) {
            for (auto f : fields) {
                if (f.empty()) throw StructuralError("csv: empty column name in header");
                t.columns.emplace_back(f);
            }
            continue;
        }
        if (fields.size() != t.columns.size())
            throw StructuralError("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                  " fields, header has " + std::to_string(t.columns.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        try {
            for (auto f : fields) row.push_back(parse_double(f));
        } catch (const StructuralError& e) {
            throw StructuralError("csv: line " + std::to_string(line_no) + ": " + e.what());
        }
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw StructuralError("csv: no header row");
    if (t.rows.empty()) throw StructuralError("csv: no data rows");
    return t;
}

/// Single column of numbers, optionally preceded by a header; the last
/// column is used when a row has several fields. Used for tabulated rates.
inline std::vector<double> read_value_column(std::istream& is) {
    std::vector<double> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        try {
            out.push_back(parse_double(fields.back()));
        } catch (const StructuralError&) {
            if (!first) throw;
        }
        first = false;
    }
    if (out.empty()) throw StructuralError("csv: no values");
    return out;
}

}  // namespace poscert::io
