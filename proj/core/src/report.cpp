#include "capinfer/report.hpp"

#include <algorithm>
#include <sstream>

#include "capinfer/io.hpp"
#include "capinfer/version.hpp"

namespace capinfer::report {

namespace {

std::string config_header_lines(const ReportInputs& inputs) {
    std::string out;
    out += "# tool_version = " + std::string(kVersion) + "\n";
    out += "# seed = " + inputs.seed + "\n";
    std::istringstream config(inputs.resolved_config);
    std::string line;
    while (std::getline(config, line)) out += "# " + line + "\n";
    return out;
}

std::string html_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string fmt(double v) { return io::format_double(v); }

}  // namespace

std::string leaderboard_csv(const ReportInputs& inputs) {
    std::string out = config_header_lines(inputs);
    out += "model,accuracy,ci_lower,ci_upper,items\n";
    for (const auto& row : inputs.leaderboard) {
        out += row.model + "," + fmt(row.accuracy) + "," + fmt(row.lower) + "," +
               fmt(row.upper) + "," + std::to_string(row.items) + "\n";
    }
    return out;
}

std::string sensitivity_csv(const ReportInputs& inputs) {
    std::string out = config_header_lines(inputs);
    out += "model,mad_min,mad_q25,mad_median,mad_q75,mad_max,mad_mean\n";
    for (const auto& row : inputs.sensitivity) {
        const auto& s = row.summary;
        out += row.model + "," + fmt(s.min) + "," + fmt(s.q25) + "," + fmt(s.median) + "," +
               fmt(s.q75) + "," + fmt(s.max) + "," + fmt(s.mean) + "\n";
    }
    return out;
}

namespace {

// Leaderboard as horizontal bars on [0,1] with interval whiskers.
std::string leaderboard_svg(const ReportInputs& inputs) {
    const int row_height = 28;
    const int label_width = 160;
    const int plot_width = 560;
    const int top = 24;
    const int height = top + row_height * static_cast<int>(inputs.leaderboard.size()) + 16;
    const int width = label_width + plot_width + 48;

    auto x_of = [&](double v) {
        return label_width + v * plot_width;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (int tick = 0; tick <= 10; tick += 2) {
        const double v = tick / 10.0;
        svg << "<line x1=\"" << x_of(v) << "\" y1=\"" << top - 8 << "\" x2=\"" << x_of(v)
            << "\" y2=\"" << height - 12 << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << x_of(v) - 8 << "\" y=\"" << top - 12 << "\" fill=\"#666\">"
            << fmt(v) << "</text>\n";
    }
    int y = top;
    for (const auto& row : inputs.leaderboard) {
        const int cy = y + row_height / 2;
        svg << "<text x=\"8\" y=\"" << cy + 4 << "\">" << html_escape(row.model) << "</text>\n";
        svg << "<rect x=\"" << x_of(0.0) << "\" y=\"" << y + 6 << "\" width=\""
            << std::max(0.0, x_of(row.accuracy) - x_of(0.0)) << "\" height=\""
            << row_height - 12 << "\" fill=\"#4e79a7\"/>\n";
        svg << "<line x1=\"" << x_of(row.lower) << "\" y1=\"" << cy << "\" x2=\""
            << x_of(row.upper) << "\" y2=\"" << cy << "\" stroke=\"#222\" stroke-width=\"2\"/>\n";
        svg << "<line x1=\"" << x_of(row.lower) << "\" y1=\"" << cy - 5 << "\" x2=\""
            << x_of(row.lower) << "\" y2=\"" << cy + 5 << "\" stroke=\"#222\" stroke-width=\"2\"/>\n";
        svg << "<line x1=\"" << x_of(row.upper) << "\" y1=\"" << cy - 5 << "\" x2=\""
            << x_of(row.upper) << "\" y2=\"" << cy + 5 << "\" stroke=\"#222\" stroke-width=\"2\"/>\n";
        y += row_height;
    }
    svg << "</svg>\n";
    return svg.str();
}

// Sensitivity quantiles as min/q25/median/q75/max range strips on [0, 0.5].
std::string sensitivity_svg(const ReportInputs& inputs) {
    const int row_height = 28;
    const int label_width = 160;
    const int plot_width = 560;
    const int top = 24;
    const int height = top + row_height * static_cast<int>(inputs.sensitivity.size()) + 16;
    const int width = label_width + plot_width + 48;

    auto x_of = [&](double v) {
        return label_width + (v / 0.5) * plot_width;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = tick / 10.0;
        svg << "<line x1=\"" << x_of(v) << "\" y1=\"" << top - 8 << "\" x2=\"" << x_of(v)
            << "\" y2=\"" << height - 12 << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << x_of(v) - 8 << "\" y=\"" << top - 12 << "\" fill=\"#666\">"
            << fmt(v) << "</text>\n";
    }
    int y = top;
    for (const auto& row : inputs.sensitivity) {
        const auto& s = row.summary;
        const int cy = y + row_height / 2;
        svg << "<text x=\"8\" y=\"" << cy + 4 << "\">" << html_escape(row.model) << "</text>\n";
        svg << "<line x1=\"" << x_of(s.min) << "\" y1=\"" << cy << "\" x2=\"" << x_of(s.max)
            << "\" y2=\"" << cy << "\" stroke=\"#999\"/>\n";
        svg << "<rect x=\"" << x_of(s.q25) << "\" y=\"" << y + 8 << "\" width=\""
            << std::max(0.0, x_of(s.q75) - x_of(s.q25)) << "\" height=\"" << row_height - 16
            << "\" fill=\"#f28e2b\" opacity=\"0.7\"/>\n";
        svg << "<line x1=\"" << x_of(s.median) << "\" y1=\"" << y + 6 << "\" x2=\""
            << x_of(s.median) << "\" y2=\"" << y + row_height - 6
            << "\" stroke=\"#222\" stroke-width=\"2\"/>\n";
        y += row_height;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

std::string report_html(const ReportInputs& inputs) {
    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
         << "<title>capinfer report</title>\n</head>\n<body>\n"
         << "<h1>Capability report</h1>\n";
    if (!inputs.leaderboard.empty()) {
        html << "<h2>Accuracy with bootstrap intervals</h2>\n" << leaderboard_svg(inputs);
    }
    if (!inputs.sensitivity.empty()) {
        html << "<h2>Perturbation sensitivity (per-item MAD distribution)</h2>\n"
             << sensitivity_svg(inputs);
    }
    html << "<h2>Provenance</h2>\n<pre>\n"
         << "tool_version = " << kVersion << "\n"
         << "seed = " << html_escape(inputs.seed) << "\n"
         << html_escape(inputs.resolved_config) << "</pre>\n</body>\n</html>\n";
    return html.str();
}

void write_report(const ReportInputs& inputs, const std::filesystem::path& out_dir) {
    io::atomic_write(out_dir / "leaderboard.csv", leaderboard_csv(inputs));
    io::atomic_write(out_dir / "sensitivity.csv", sensitivity_csv(inputs));
    io::atomic_write(out_dir / "report.html", report_html(inputs));
}

}  // namespace capinfer::report
