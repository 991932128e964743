#include "cktx/svg_plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cktx {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 180.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 60.0;

const char* kPalette[] = {"#1f77b4", "#2ca02c", "#ff7f0e", "#d62728",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Frame {
    double y_min = 0.0;
    double y_max = 1.0;
    int categories = 1;

    double x(int category) const {
        const double span = kWidth - kMarginLeft - kMarginRight;
        if (categories <= 1) return kMarginLeft + span / 2.0;
        return kMarginLeft + span * static_cast<double>(category) /
                                 static_cast<double>(categories - 1);
    }
    double y(double value) const {
        const double span = kHeight - kMarginTop - kMarginBottom;
        const double f = (value - y_min) / (y_max - y_min);
        return kHeight - kMarginBottom - f * span;
    }
};

void emit_axes(std::ostringstream& svg, const Frame& frame,
               const std::vector<std::string>& categories, const std::string& title,
               const std::string& y_label) {
    svg << "  <rect x=\"0\" y=\"0\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
        << "\" fill=\"white\"/>\n";
    svg << "  <text x=\"" << fmt(kWidth / 2.0) << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";

    // y grid and ticks
    const int y_ticks = 6;
    svg << "  <g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
    for (int i = 0; i <= y_ticks; ++i) {
        const double value =
            frame.y_min + (frame.y_max - frame.y_min) * static_cast<double>(i) / y_ticks;
        const double py = frame.y(value);
        svg << "    <line x1=\"" << fmt(kMarginLeft) << "\" y1=\"" << fmt(py) << "\" x2=\""
            << fmt(kWidth - kMarginRight) << "\" y2=\"" << fmt(py)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "    <text x=\"" << fmt(kMarginLeft - 8.0) << "\" y=\"" << fmt(py + 4.0)
            << "\" text-anchor=\"end\">" << fmt(value) << "</text>\n";
    }
    for (size_t c = 0; c < categories.size(); ++c) {
        const double px = frame.x(static_cast<int>(c));
        svg << "    <text x=\"" << fmt(px) << "\" y=\"" << fmt(kHeight - kMarginBottom + 20.0)
            << "\" text-anchor=\"middle\">" << categories[c] << "</text>\n";
    }
    svg << "    <text x=\"" << fmt(kWidth / 2.0) << "\" y=\"" << fmt(kHeight - 16.0)
        << "\" text-anchor=\"middle\">barrier difficulty</text>\n";
    svg << "    <text x=\"18\" y=\"" << fmt(kHeight / 2.0)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << fmt(kHeight / 2.0) << ")\">"
        << y_label << "</text>\n";
    svg << "  </g>\n";
    svg << "  <rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(kMarginTop) << "\" width=\""
        << fmt(kWidth - kMarginLeft - kMarginRight) << "\" height=\""
        << fmt(kHeight - kMarginTop - kMarginBottom)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
}

void emit_band(std::ostringstream& svg, const Frame& frame, const std::vector<double>& lo,
               const std::vector<double>& hi, const std::string& color) {
    svg << "  <polygon fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (size_t i = 0; i < hi.size(); ++i) {
        svg << fmt(frame.x(static_cast<int>(i))) << "," << fmt(frame.y(hi[i])) << " ";
    }
    for (size_t i = lo.size(); i > 0; --i) {
        svg << fmt(frame.x(static_cast<int>(i - 1))) << "," << fmt(frame.y(lo[i - 1])) << " ";
    }
    svg << "\"/>\n";
}

void emit_series(std::ostringstream& svg, const Frame& frame, const std::vector<double>& values,
                 const std::string& color) {
    svg << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < values.size(); ++i) {
        svg << fmt(frame.x(static_cast<int>(i))) << "," << fmt(frame.y(values[i])) << " ";
    }
    svg << "\"/>\n";
    for (size_t i = 0; i < values.size(); ++i) {
        svg << "  <circle cx=\"" << fmt(frame.x(static_cast<int>(i))) << "\" cy=\""
            << fmt(frame.y(values[i])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
}

void emit_legend(std::ostringstream& svg, const std::vector<std::pair<std::string, std::string>>&
                                              entries /* label, color */) {
    const double x = kWidth - kMarginRight + 16.0;
    double y = kMarginTop + 10.0;
    svg << "  <g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
    for (const auto& [label, color] : entries) {
        svg << "    <rect x=\"" << fmt(x) << "\" y=\"" << fmt(y - 9.0)
            << "\" width=\"14\" height=\"10\" fill=\"" << color << "\"/>\n";
        svg << "    <text x=\"" << fmt(x + 20.0) << "\" y=\"" << fmt(y) << "\">" << label
            << "</text>\n";
        y += 20.0;
    }
    svg << "  </g>\n";
}

void write_svg(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\""
        << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << " " << fmt(kHeight) << "\">\n"
        << body << "</svg>\n";
}

struct Table {
    std::vector<std::string> barriers;   // x categories, first-appearance order
    std::vector<std::string> scenarios;  // series, first-appearance order
    // value[scenario][barrier]
    std::map<std::string, std::map<std::string, double>> ofpr_pick;
    std::map<std::string, std::map<std::string, double>> ofpr_rand;
    std::map<std::string, std::map<std::string, double>> ofpr_pstar;
    std::map<std::string, std::map<std::string, double>> delta_ck;
};

Table tabulate(const std::vector<ResultRow>& rows) {
    Table t;
    for (const auto& r : rows) {
        if (std::find(t.barriers.begin(), t.barriers.end(), r.barrier) == t.barriers.end()) {
            t.barriers.push_back(r.barrier);
        }
        if (std::find(t.scenarios.begin(), t.scenarios.end(), r.goal_scenario) ==
            t.scenarios.end()) {
            t.scenarios.push_back(r.goal_scenario);
        }
        if (r.metric == "OFPR" && r.agent == "PiCK") {
            t.ofpr_pick[r.goal_scenario][r.barrier] = r.mean;
        } else if (r.metric == "OFPR" && r.agent == "Rand") {
            t.ofpr_rand[r.goal_scenario][r.barrier] = r.mean;
        } else if (r.metric == "OFPR" && r.agent == "PStar") {
            t.ofpr_pstar[r.goal_scenario][r.barrier] = r.mean;
        } else if (r.metric == "DeltaCK") {
            t.delta_ck[r.goal_scenario][r.barrier] = r.mean;
        }
    }
    return t;
}

std::vector<double> series_values(const std::map<std::string, double>& by_barrier,
                                  const std::vector<std::string>& barriers) {
    std::vector<double> values;
    values.reserve(barriers.size());
    for (const auto& b : barriers) {
        const auto it = by_barrier.find(b);
        if (it == by_barrier.end()) {
            throw std::invalid_argument("results table is missing barrier cell: " + b);
        }
        values.push_back(it->second);
    }
    return values;
}

} // namespace

std::vector<std::string> emit_plots(const std::vector<ResultRow>& rows,
                                    const std::filesystem::path& out_dir) {
    if (rows.empty()) {
        throw std::invalid_argument("emit_plots: empty results table");
    }
    const Table table = tabulate(rows);
    if (table.barriers.empty() || table.ofpr_pick.empty()) {
        throw std::invalid_argument("emit_plots: no OFPR(PiCK) rows to plot");
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;

    // ---- Chart (a): OFPR(pi_CK) with Rand / P* reference bands.
    {
        Frame frame;
        frame.y_min = 0.0;
        frame.y_max = 1.05;
        frame.categories = static_cast<int>(table.barriers.size());
        std::ostringstream svg;
        emit_axes(svg, frame, table.barriers, "Path efficiency of the causal-model agent",
                  "OFPR");

        std::vector<std::pair<std::string, std::string>> legend;
        if (!table.ofpr_rand.empty() && !table.ofpr_pstar.empty()) {
            std::vector<double> rand_lo, rand_hi, pstar_lo, pstar_hi;
            for (const auto& b : table.barriers) {
                double rlo = 1e9, rhi = -1e9, plo = 1e9, phi = -1e9;
                for (const auto& s : table.scenarios) {
                    const auto rit = table.ofpr_rand.find(s);
                    if (rit != table.ofpr_rand.end() && rit->second.count(b)) {
                        rlo = std::min(rlo, rit->second.at(b));
                        rhi = std::max(rhi, rit->second.at(b));
                    }
                    const auto pit = table.ofpr_pstar.find(s);
                    if (pit != table.ofpr_pstar.end() && pit->second.count(b)) {
                        plo = std::min(plo, pit->second.at(b));
                        phi = std::max(phi, pit->second.at(b));
                    }
                }
                rand_lo.push_back(rlo);
                rand_hi.push_back(rhi);
                pstar_lo.push_back(plo);
                pstar_hi.push_back(phi);
            }
            emit_band(svg, frame, rand_lo, rand_hi, "#d62728");
            emit_band(svg, frame, pstar_lo, pstar_hi, "#2ca02c");
            legend.push_back({"Rand band", "#d62728"});
            legend.push_back({"P* band", "#2ca02c"});
        }
        int color = 0;
        for (const auto& s : table.scenarios) {
            const auto it = table.ofpr_pick.find(s);
            if (it == table.ofpr_pick.end()) continue;
            const std::string c = kPalette[color % 8];
            emit_series(svg, frame, series_values(it->second, table.barriers), c);
            legend.push_back({"pi_CK " + s, c});
            ++color;
        }
        emit_legend(svg, legend);
        write_svg(out_dir / "ofpr_by_barrier.svg", svg.str());
        written.push_back("ofpr_by_barrier.svg");
    }

    // ---- Chart (b): net teacher value.
    if (!table.delta_ck.empty()) {
        double lo = 0.0, hi = 0.0;
        for (const auto& [s, by_barrier] : table.delta_ck) {
            for (const auto& [b, v] : by_barrier) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        const double pad = std::max(0.05, (hi - lo) * 0.15);
        Frame frame;
        frame.y_min = lo - pad;
        frame.y_max = hi + pad;
        frame.categories = static_cast<int>(table.barriers.size());
        std::ostringstream svg;
        emit_axes(svg, frame, table.barriers, "Net teacher value after transfer", "Delta_CK");
        svg << "  <line x1=\"" << fmt(kMarginLeft) << "\" y1=\"" << fmt(frame.y(0.0))
            << "\" x2=\"" << fmt(kWidth - kMarginRight) << "\" y2=\"" << fmt(frame.y(0.0))
            << "\" stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"5,3\"/>\n";
        std::vector<std::pair<std::string, std::string>> legend;
        int color = 0;
        for (const auto& s : table.scenarios) {
            const auto it = table.delta_ck.find(s);
            if (it == table.delta_ck.end()) continue;
            const std::string c = kPalette[color % 8];
            emit_series(svg, frame, series_values(it->second, table.barriers), c);
            legend.push_back({"Delta_CK " + s, c});
            ++color;
        }
        emit_legend(svg, legend);
        write_svg(out_dir / "delta_ck_by_barrier.svg", svg.str());
        written.push_back("delta_ck_by_barrier.svg");
    }

    return written;
}

std::vector<std::string> emit_plots_from_csv(const std::string& csv_text,
                                             const std::filesystem::path& out_dir) {
    return emit_plots(rows_from_csv(csv_text), out_dir);
}

} // namespace cktx
