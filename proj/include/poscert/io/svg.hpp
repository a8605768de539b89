#pragma once

// Static SVG rendering of trajectory tables. Output depends only on the
// table, so identical inputs give identical bytes.

#include "poscert/error.hpp"
#include "poscert/io/csv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace poscert::io {

struct ColumnGroups {
    std::vector<std::size_t> lines;  // scalar columns
    struct Grid {
        std::string label;
        std::vector<std::size_t> columns;
    };
    std::vector<Grid> grids;  // columns named label[j]
};

/// Splits the non-time columns into plain series and grid blocks.
inline ColumnGroups group_columns(const Table& t) {
    ColumnGroups g;
    for (std::size_t c = 1; c < t.columns.size(); ++c) {
        const auto& name = t.columns[c];
        const auto br = name.find('[');
        if (br == std::string::npos || br == 0 || name.back() != ']') {
            g.lines.push_back(c);
            continue;
        }
        const auto label = name.substr(0, br);
        if (g.grids.empty() || g.grids.back().label != label) g.grids.push_back({label, {}});
        g.grids.back().columns.push_back(c);
    }
    return g;
}

namespace detail {

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

inline std::string tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Viridis anchors, linearly interpolated.
inline std::string colormap(double v) {
    static constexpr std::array<std::array<int, 3>, 5> stops{
        {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    v = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0) * 4.0;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(v), 3);
    const double f = v - static_cast<double>(i);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                  static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                  static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
    return buf;
}

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

struct Frame {
    double x = 60, y = 0, w = 620, h = 240;
};

inline void axes(std::string& s, const Frame& f, double t0, double t1, double v0, double v1, const std::string& title) {
    s += "<rect x=\"" + fmt(f.x) + "\" y=\"" + fmt(f.y) + "\" width=\"" + fmt(f.w) + "\" height=\"" + fmt(f.h) +
         "\" fill=\"none\" stroke=\"#333\"/>\n";
    s += "<text x=\"" + fmt(f.x) + "\" y=\"" + fmt(f.y - 6) + "\" font-size=\"12\">" + escape(title) + "</text>\n";
    s += "<text x=\"" + fmt(f.x) + "\" y=\"" + fmt(f.y + f.h + 14) + "\" font-size=\"10\">" + tick(t0) + "</text>\n";
    s += "<text x=\"" + fmt(f.x + f.w) + "\" y=\"" + fmt(f.y + f.h + 14) +
         "\" font-size=\"10\" text-anchor=\"end\">t = " + tick(t1) + "</text>\n";
    s += "<text x=\"" + fmt(f.x - 4) + "\" y=\"" + fmt(f.y + f.h) + "\" font-size=\"10\" text-anchor=\"end\">" +
         tick(v0) + "</text>\n";
    s += "<text x=\"" + fmt(f.x - 4) + "\" y=\"" + fmt(f.y + 10) + "\" font-size=\"10\" text-anchor=\"end\">" +
         tick(v1) + "</text>\n";
}

inline void line_panel(std::string& s, const Table& t, const std::vector<std::size_t>& cols, const Frame& f) {
    const double t0 = t.rows.front()[0], t1 = t.rows.back()[0];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : t.rows)
        for (auto c : cols)
            if (std::isfinite(r[c])) {
                lo = std::min(lo, r[c]);
                hi = std::max(hi, r[c]);
            }
    if (!(lo <= hi)) lo = hi = 0.0;
    if (hi - lo < 1e-300) {
        lo -= 0.5;
        hi += 0.5;
    }
    std::string title;
    for (std::size_t k = 0; k < cols.size(); ++k) title += (k ? ", " : "") + t.columns[cols[k]];
    axes(s, f, t0, t1, lo, hi, title);
    const double span_t = t1 > t0 ? t1 - t0 : 1.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        s += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" +
             std::string(kPalette[k % kPalette.size()]) + "\" points=\"";
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const double v = std::isfinite(t.rows[i][cols[k]]) ? t.rows[i][cols[k]] : lo;
            const double x = f.x + f.w * (t.rows[i][0] - t0) / span_t;
            const double y = f.y + f.h * (1.0 - (v - lo) / (hi - lo));
            s += (i ? " " : "") + fmt(x) + "," + fmt(y);
        }
        s += "\"/>\n";
        s += "<text x=\"" + fmt(f.x + f.w + 6) + "\" y=\"" + fmt(f.y + 12 + 14.0 * static_cast<double>(k)) +
             "\" font-size=\"10\" fill=\"" + kPalette[k % kPalette.size()] + "\">" + escape(t.columns[cols[k]]) +
             "</text>\n";
    }
}

/// Time on x, cell index on y (first cell at the bottom); at most 240 x 120 tiles.
inline void heatmap_panel(std::string& s, const Table& t, const ColumnGroups::Grid& g, const Frame& f) {
    const std::size_t nt = std::min<std::size_t>(t.rows.size(), 240);
    const std::size_t nc = std::min<std::size_t>(g.columns.size(), 120);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : t.rows)
        for (auto c : g.columns)
            if (std::isfinite(r[c])) {
                lo = std::min(lo, r[c]);
                hi = std::max(hi, r[c]);
            }
    if (!(lo <= hi)) lo = hi = 0.0;
    const double span = hi > lo ? hi - lo : 1.0;
    axes(s, f, t.rows.front()[0], t.rows.back()[0], 0, static_cast<double>(g.columns.size()),
         g.label + " (cell index vs t; colour " + tick(lo) + " to " + tick(hi) + ")");
    const double tw = f.w / static_cast<double>(nt), ch = f.h / static_cast<double>(nc);
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& row = t.rows[i * t.rows.size() / nt];
        for (std::size_t j = 0; j < nc; ++j) {
            const double v = row[g.columns[j * g.columns.size() / nc]];
            s += "<rect x=\"" + fmt(f.x + tw * static_cast<double>(i)) + "\" y=\"" +
                 fmt(f.y + f.h - ch * static_cast<double>(j + 1)) + "\" width=\"" + fmt(tw + 0.3) +
                 "\" height=\"" + fmt(ch + 0.3) + "\" fill=\"" + colormap((v - lo) / span) + "\"/>\n";
        }
    }
}

}  // namespace detail

/// Line chart of the plain series (if any) stacked above one heatmap per grid block.
inline std::string render_svg(const Table& t) {
    if (t.columns.size() < 2) throw StructuralError("plot: need a time column and at least one series");
    if (t.rows.empty()) throw StructuralError("plot: no data rows");
    const auto groups = group_columns(t);
    const double panel_h = 240, gap = 50, top = 30;
    const std::size_t panels = (groups.lines.empty() ? 0 : 1) + groups.grids.size();
    const double height = top + static_cast<double>(panels) * (panel_h + gap);
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"" + detail::fmt(height) +
                    "\" viewBox=\"0 0 760 " + detail::fmt(height) + "\" font-family=\"sans-serif\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    double y = top;
    if (!groups.lines.empty()) {
        detail::line_panel(s, t, groups.lines, {60, y, 620, panel_h});
        y += panel_h + gap;
    }
    for (const auto& g : groups.grids) {
        detail::heatmap_panel(s, t, g, {60, y, 620, panel_h});
        y += panel_h + gap;
    }
    s += "</svg>\n";
    return s;
}

}  // namespace poscert::io
