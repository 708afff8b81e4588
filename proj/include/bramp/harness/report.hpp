#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bramp/harness/benchmark.hpp"

namespace bramp {

inline constexpr const char* kStepsHeader =
    "run,step,kind,p,p_dot,q,q_dot,u,stage_cost,theta_m_hat,theta_l_hat,eps_k,planned_value,violation";
inline constexpr const char* kSummaryHeader = "kind,metric,mean,std,n_runs";

/// 12 significant digits.
inline std::string fmt12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string steps_csv(const std::vector<EpisodeRecord>& records) {
    std::string out = kStepsHeader;
    out += '\n';
    for (const auto& rec : records) {
        for (std::size_t k = 0; k < rec.steps.size(); ++k) {
            const auto& s = rec.steps[k];
            out += std::to_string(rec.run) + ',' + std::to_string(k) + ',' + std::string(to_string(rec.kind));
            for (double v : {s.x[0], s.x[1], s.x[2], s.x[3], s.u, s.stage_cost, s.theta_hat[0], s.theta_hat[1], s.eps,
                             s.planned_value}) {
                out += ',';
                out += fmt12(v);
            }
            out += s.violation ? ",1\n" : ",0\n";
        }
    }
    return out;
}

inline std::string summary_csv(const BenchmarkTable& table) {
    std::string out = kSummaryHeader;
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
            out += std::string(to_string(row.kind)) + ',' + std::string(kMetricNames[m]) + ',' +
                   fmt12(row.metrics[m].mean) + ',' + fmt12(row.metrics[m].std) + ',' + std::to_string(row.n_runs) +
                   '\n';
        }
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
    f.close();
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline void write_csv(const std::vector<EpisodeRecord>& records, const std::string& path) {
    write_text(path, steps_csv(records));
}

inline void write_csv(const BenchmarkTable& table, const std::string& path) { write_text(path, summary_csv(table)); }

/// Parsed CSV: header fields and string cells per row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::out_of_range("CSV has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
    [[nodiscard]] double number(std::size_t row, const std::string& name) const {
        return std::stod(rows.at(row).at(column(name)));
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("'" + path + "' is empty");
    t.header = split_csv_line(line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size())
            throw std::runtime_error("'" + path + "': row " + std::to_string(t.rows.size() + 1) + " has " +
                                     std::to_string(cells.size()) + " fields");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline std::string svg_escape(std::string_view s) {
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

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace detail

/// Four panels, one per metric; a bar per controller kind at the mean with a +-1 std whisker.
inline std::string svg_summary(const BenchmarkTable& table) {
    if (table.rows.empty()) throw std::invalid_argument("svg_summary: empty table");
    static constexpr const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};
    constexpr double panel_w = 300.0, panel_h = 240.0;
    constexpr double left = 60.0, right = 15.0, top = 30.0, bottom = 45.0;
    constexpr double plot_w = panel_w - left - right, plot_h = panel_h - top - bottom;
    const double width = 2 * panel_w, height = 2 * panel_h;

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    const std::size_t nk = table.rows.size();
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
        const double ox = static_cast<double>(m % 2) * panel_w;
        const double oy = static_cast<double>(m / 2) * panel_h;
        double ymax = 0.0;
        for (const auto& r : table.rows) ymax = std::max(ymax, r.metrics[m].mean + r.metrics[m].std);
        if (!(ymax > 0.0)) ymax = 1.0;
        auto ypix = [&](double v) { return oy + top + plot_h * (1.0 - std::clamp(v, 0.0, ymax) / ymax); };

        o << "<g class=\"panel\" id=\"" << kMetricNames[m] << "\">\n";
        o << "<text x=\"" << detail::num(ox + panel_w / 2) << "\" y=\"" << detail::num(oy + 18)
          << "\" text-anchor=\"middle\" font-size=\"13\">" << kMetricNames[m] << "</text>\n";
        // axes
        o << "<line x1=\"" << detail::num(ox + left) << "\" y1=\"" << detail::num(oy + top) << "\" x2=\""
          << detail::num(ox + left) << "\" y2=\"" << detail::num(oy + top + plot_h) << "\" stroke=\"black\"/>\n";
        o << "<line x1=\"" << detail::num(ox + left) << "\" y1=\"" << detail::num(oy + top + plot_h) << "\" x2=\""
          << detail::num(ox + left + plot_w) << "\" y2=\"" << detail::num(oy + top + plot_h)
          << "\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double v = ymax * t / 4.0;
            o << "<text x=\"" << detail::num(ox + left - 4) << "\" y=\"" << detail::num(ypix(v) + 4)
              << "\" text-anchor=\"end\">" << detail::svg_escape(fmt12(v)).substr(0, 8) << "</text>\n";
        }
        o << "<text x=\"" << detail::num(ox + 14) << "\" y=\"" << detail::num(oy + top + plot_h / 2)
          << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << detail::num(ox + 14) << ' '
          << detail::num(oy + top + plot_h / 2) << ")\">mean &#177; 1 std</text>\n";

        const double slot = plot_w / static_cast<double>(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            const auto& st = table.rows[k].metrics[m];
            const double cx = ox + left + slot * (static_cast<double>(k) + 0.5);
            const double bw = slot * 0.6;
            const double y0 = ypix(0.0);
            const double y1 = ypix(st.mean);
            o << "<rect class=\"bar\" x=\"" << detail::num(cx - bw / 2) << "\" y=\"" << detail::num(std::min(y0, y1))
              << "\" width=\"" << detail::num(bw) << "\" height=\"" << detail::num(std::abs(y0 - y1))
              << "\" fill=\"" << kColors[k % 6] << "\"/>\n";
            const double lo = ypix(st.mean - st.std);
            const double hi = ypix(st.mean + st.std);
            o << "<line class=\"whisker\" x1=\"" << detail::num(cx) << "\" y1=\"" << detail::num(lo) << "\" x2=\""
              << detail::num(cx) << "\" y2=\"" << detail::num(hi) << "\" stroke=\"black\"/>\n";
            o << "<text x=\"" << detail::num(cx) << "\" y=\"" << detail::num(oy + top + plot_h + 14)
              << "\" text-anchor=\"middle\" font-size=\"9\">" << to_string(table.rows[k].kind) << "</text>\n";
        }
        o << "<text x=\"" << detail::num(ox + left + plot_w / 2) << "\" y=\"" << detail::num(oy + panel_h - 8)
          << "\" text-anchor=\"middle\">controller</text>\n";
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

inline void render_svg_summary(const BenchmarkTable& table, const std::string& path) {
    write_text(path, svg_summary(table));
}

}  // namespace bramp
