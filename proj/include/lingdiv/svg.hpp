#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lingdiv/common.hpp"
#include "lingdiv/csv.hpp"

namespace lingdiv::svg {

struct RenderOptions {
    double width = 900.0;
    double height = 420.0;
    std::string value_column = "cr";
    std::string title;
};

namespace detail {

constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 160.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 50.0;

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors = {
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
        "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
        "#8c6d31", "#843c39", "#7b4173", "#3182bd"};
    return colors;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct SeriesPoint {
    double value = 0.0;
    std::optional<double> ci_lo;
    std::optional<double> ci_hi;
};

} // namespace lingdiv::svg::detail

// Line chart over a (region_code, period, value[, ci_lo, ci_hi]) table:
// one polyline per region, a translucent band polygon when CI columns are
// present, categorical x over sorted periods, fixed y range [0, 1].
inline std::string render_series_svg(const csv::Table& table, const RenderOptions& opt = {}) {
    const std::size_t col_region = table.column("region_code");
    const std::size_t col_period = table.column("period");
    const std::size_t col_value = table.column(opt.value_column);
    const bool has_ci = table.has_column("ci_lo") && table.has_column("ci_hi");
    const std::size_t col_lo = has_ci ? table.column("ci_lo") : 0;
    const std::size_t col_hi = has_ci ? table.column("ci_hi") : 0;

    if (table.rows.empty()) throw data_error("render: empty series");

    std::set<std::string> period_set;
    std::map<std::string, std::map<std::string, detail::SeriesPoint>> series;
    for (const auto& row : table.rows) {
        detail::SeriesPoint pt;
        pt.value = csv::parse_double(row.at(col_value), opt.value_column);
        if (has_ci) {
            pt.ci_lo = csv::parse_double(row.at(col_lo), "ci_lo");
            pt.ci_hi = csv::parse_double(row.at(col_hi), "ci_hi");
        }
        period_set.insert(row.at(col_period));
        series[row.at(col_region)][row.at(col_period)] = pt;
    }

    const std::vector<std::string> periods(period_set.begin(), period_set.end());
    std::map<std::string, double> x_of;
    const double plot_w = opt.width - detail::kMarginLeft - detail::kMarginRight;
    const double plot_h = opt.height - detail::kMarginTop - detail::kMarginBottom;
    for (std::size_t i = 0; i < periods.size(); ++i) {
        double frac = periods.size() == 1 ? 0.5
                                          : static_cast<double>(i) /
                                                static_cast<double>(periods.size() - 1);
        x_of[periods[i]] = detail::kMarginLeft + frac * plot_w;
    }
    auto y_of = [&](double v) {
        v = std::clamp(v, 0.0, 1.0);
        return detail::kMarginTop + (1.0 - v) * plot_h;
    };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(opt.width) +
           "\" height=\"" + detail::num(opt.height) + "\" viewBox=\"0 0 " +
           detail::num(opt.width) + " " + detail::num(opt.height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty())
        out += "<text x=\"" + detail::num(detail::kMarginLeft) + "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" +
               detail::escape_xml(opt.title) + "</text>\n";

    for (int i = 0; i <= 5; ++i) {
        const double v = static_cast<double>(i) / 5.0;
        const double y = y_of(v);
        out += "<line x1=\"" + detail::num(detail::kMarginLeft) + "\" y1=\"" + detail::num(y) +
               "\" x2=\"" + detail::num(opt.width - detail::kMarginRight) + "\" y2=\"" +
               detail::num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out += "<text x=\"" + detail::num(detail::kMarginLeft - 8.0) + "\" y=\"" +
               detail::num(y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               detail::num(v) + "</text>\n";
    }
    const std::size_t label_step = periods.size() <= 12 ? 1 : (periods.size() + 11) / 12;
    for (std::size_t i = 0; i < periods.size(); i += label_step) {
        out += "<text x=\"" + detail::num(x_of[periods[i]]) + "\" y=\"" +
               detail::num(opt.height - detail::kMarginBottom + 18.0) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               detail::escape_xml(periods[i]) + "</text>\n";
    }
    out += "<line x1=\"" + detail::num(detail::kMarginLeft) + "\" y1=\"" +
           detail::num(opt.height - detail::kMarginBottom) + "\" x2=\"" +
           detail::num(opt.width - detail::kMarginRight) + "\" y2=\"" +
           detail::num(opt.height - detail::kMarginBottom) +
           "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    std::size_t color_index = 0;
    for (const auto& [region, points] : series) {
        const std::string& color = detail::palette()[color_index % detail::palette().size()];
        ++color_index;

        if (has_ci) {
            std::string band;
            std::vector<std::string> lower;
            for (const auto& period : periods) {
                auto it = points.find(period);
                if (it == points.end()) continue;
                band += detail::num(x_of[period]) + "," + detail::num(y_of(*it->second.ci_hi)) + " ";
                lower.push_back(detail::num(x_of[period]) + "," +
                                detail::num(y_of(*it->second.ci_lo)));
            }
            std::reverse(lower.begin(), lower.end());
            for (std::size_t i = 0; i < lower.size(); ++i)
                band += lower[i] + (i + 1 < lower.size() ? " " : "");
            out += "<polygon points=\"" + band + "\" fill=\"" + color +
                   "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        }

        std::string line;
        for (const auto& period : periods) {
            auto it = points.find(period);
            if (it == points.end()) continue;
            if (!line.empty()) line.push_back(' ');
            line += detail::num(x_of[period]) + "," + detail::num(y_of(it->second.value));
        }
        out += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
    }

    double legend_y = detail::kMarginTop + 10.0;
    color_index = 0;
    const double legend_x = opt.width - detail::kMarginRight + 16.0;
    for (const auto& [region, _] : series) {
        const std::string& color = detail::palette()[color_index % detail::palette().size()];
        ++color_index;
        out += "<rect x=\"" + detail::num(legend_x) + "\" y=\"" + detail::num(legend_y - 9.0) +
               "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
        out += "<text x=\"" + detail::num(legend_x + 18.0) + "\" y=\"" + detail::num(legend_y + 1.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::escape_xml(region) +
               "</text>\n";
        legend_y += 18.0;
    }

    out += "</svg>\n";
    return out;
}

} // namespace lingdiv::svg
