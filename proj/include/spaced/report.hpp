#pragma once

// Text renderings of analysis and evaluation results: CSV tables, a small SVG
// figure of per-bin medians and the model comparison table.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spaced/analysis.hpp"
#include "spaced/metrics.hpp"

namespace spaced {

namespace detail {

inline std::string fmt_number(double value, int digits = 6) {
    if (std::isnan(value)) return "NA";
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*g", digits, value);
    return buffer;
}

inline std::string bin_label(const BinSpec& bin) {
    return std::to_string(bin.n_reviews) + " reviews, " + fmt_number(bin.duration_center) + "+/-" +
           fmt_number(bin.duration_halfwidth) + " d";
}

} // namespace detail

inline std::string report_csv(const ComparisonReport& report) {
    std::ostringstream out;
    out << "bin,n_reviews,duration_center,duration_halfwidth,arm,n,median,q25,q75,status\n";
    for (const auto& s : report.summaries) {
        const auto& bin = report.bins[s.bin];
        out << s.bin << ',' << bin.n_reviews << ',' << detail::fmt_number(bin.duration_center) << ','
            << detail::fmt_number(bin.duration_halfwidth) << ',' << s.arm << ',' << s.n << ','
            << detail::fmt_number(s.median, 10) << ',' << detail::fmt_number(s.q25, 10) << ','
            << detail::fmt_number(s.q75, 10) << ',' << (s.n == 0 ? "NO_DATA" : "OK") << '\n';
    }
    return out.str();
}

inline std::string tests_csv(const ComparisonReport& report) {
    std::ostringstream out;
    out << "bin,n_reviews,duration_center,arm_a,arm_b,n_a,n_b,u,p_value,method,significant,status\n";
    for (const auto& t : report.tests) {
        const auto& bin = report.bins[t.bin];
        out << t.bin << ',' << bin.n_reviews << ',' << detail::fmt_number(bin.duration_center) << ','
            << t.arm_a << ',' << t.arm_b << ',' << t.n_a << ',' << t.n_b << ',';
        if (t.no_data) {
            out << "NA,NA,NA,0,NO_DATA\n";
            continue;
        }
        out << detail::fmt_number(t.test.u, 12) << ',' << detail::fmt_number(t.test.p_value, 10) << ','
            << (t.test.exact ? "exact" : "normal") << ',' << (t.significant ? 1 : 0) << ",OK\n";
    }
    return out.str();
}

// One row per bin; each arm is drawn as a median dot with its interquartile
// range on a log axis.
inline std::string report_svg(const ComparisonReport& report) {
    const double row_height = 22.0, left = 190.0, width = 420.0, top = 40.0;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : report.summaries) {
        if (s.n == 0 || !(s.q25 > 0.0)) continue;
        lo = std::min(lo, s.q25);
        hi = std::max(hi, s.q75);
    }
    if (!std::isfinite(lo)) {
        lo = 0.1;
        hi = 10.0;
    }
    if (hi <= lo) hi = lo * 10.0;
    const double llo = std::log10(lo), lhi = std::log10(hi);
    auto x_of = [&](double v) { return left + width * (std::log10(std::max(v, lo)) - llo) / (lhi - llo); };

    static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
    const double height = top + row_height * static_cast<double>(report.bins.size()) + 40.0;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 40 << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<text x=\"" << left << "\" y=\"16\">normalized forgetting rate (median, IQR; log scale)</text>\n";
    for (std::size_t a = 0; a < report.arms.size(); ++a) {
        out << "<text x=\"" << left + 110.0 * static_cast<double>(a) << "\" y=\"30\" fill=\"" << palette[a % 6]
            << "\">" << report.arms[a] << "</text>\n";
    }
    for (std::size_t b = 0; b < report.bins.size(); ++b) {
        const double y = top + row_height * (static_cast<double>(b) + 0.5);
        out << "<text x=\"4\" y=\"" << y + 4 << "\">" << detail::bin_label(report.bins[b]) << "</text>\n";
        for (std::size_t a = 0; a < report.arms.size(); ++a) {
            const auto& s = report.summary(b, report.arms[a]);
            if (s.n == 0) continue;
            const double dy = y - 6.0 + 12.0 * static_cast<double>(a) / std::max<double>(1.0, report.arms.size() - 1.0);
            out << "<line x1=\"" << x_of(s.q25) << "\" x2=\"" << x_of(s.q75) << "\" y1=\"" << dy << "\" y2=\"" << dy
                << "\" stroke=\"" << palette[a % 6] << "\"/>";
            out << "<circle cx=\"" << x_of(s.median) << "\" cy=\"" << dy << "\" r=\"2.5\" fill=\""
                << palette[a % 6] << "\"/>\n";
        }
    }
    const double axis_y = top + row_height * static_cast<double>(report.bins.size()) + 8.0;
    out << "<line x1=\"" << left << "\" x2=\"" << left + width << "\" y1=\"" << axis_y << "\" y2=\"" << axis_y
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left << "\" y=\"" << axis_y + 14 << "\">" << detail::fmt_number(lo, 3) << "</text>\n";
    out << "<text x=\"" << left + width - 30 << "\" y=\"" << axis_y + 14 << "\">" << detail::fmt_number(hi, 3)
        << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

inline nlohmann::json metrics_json(const std::vector<EvaluationResult>& results) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) {
        const auto ref = published_reference(r.kind);
        rows.push_back({{"model", std::string(to_string(r.kind))},
                        {"holdout_size", r.holdout_size},
                        {"skipped_unknown_items", r.skipped_unknown_items},
                        {"correlation", std::string(to_string(r.correlation))},
                        {"mae", opt(r.mae)},
                        {"auc", opt(r.auc)},
                        {"cor_h", opt(r.cor_h)},
                        {"reference", {{"mae", ref.mae}, {"auc", ref.auc}, {"cor_h", ref.cor_h}}}});
    }
    return nlohmann::json{{"models", rows}, {"reference_tolerance", kReferenceTolerance}};
}

// Model | MAE | AUC | COR_h, each followed by the reference value and whether
// the two agree within the tolerance.
inline std::string metrics_table(const std::vector<EvaluationResult>& results) {
    auto cell = [](const std::optional<double>& value, double reference) {
        char buffer[64];
        if (!value) {
            std::snprintf(buffer, sizeof buffer, "%-6s (ref %.3f, n/a)   ", "NA", reference);
        } else {
            const bool agree = std::abs(*value - reference) <= kReferenceTolerance;
            std::snprintf(buffer, sizeof buffer, "%.3f  (ref %.3f, %-6s)", *value, reference,
                          agree ? "agree" : "differ");
        }
        return std::string(buffer);
    };
    std::ostringstream out;
    char header[160];
    std::snprintf(header, sizeof header, "%-12s | %-27s | %-27s | %-27s\n", "Model", "MAE", "AUC", "COR_h");
    out << header;
    for (const auto& r : results) {
        const auto ref = published_reference(r.kind);
        char row[256];
        std::snprintf(row, sizeof row, "%-12s | %-27s | %-27s | %-27s\n", std::string(to_string(r.kind)).c_str(),
                      cell(r.mae, ref.mae).c_str(), cell(r.auc, ref.auc).c_str(), cell(r.cor_h, ref.cor_h).c_str());
        out << row;
    }
    return out.str();
}

} // namespace spaced
