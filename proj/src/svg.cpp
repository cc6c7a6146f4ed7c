#include "ergodec/svg.hpp"

#include <algorithm>
#include <cstdarg>
#include <cstdio>

#include "ergodec/observables.hpp"

namespace ergodec {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 36;

const char* const kPalette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#17becf"};

__attribute__((format(printf, 2, 3))) void appendf(std::string& out, const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    out += buf;
}

std::string escape_text(const std::string& s) {
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

void open_svg(std::string& out, const std::string& title) {
    appendf(out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
            "viewBox=\"0 0 %d %d\">\n",
            kWidth, kHeight, kWidth, kHeight);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    appendf(out,
            "<text x=\"%d\" y=\"24\" font-family=\"monospace\" font-size=\"14\">%s</text>\n",
            kMarginLeft, escape_text(title).c_str());
}

void axes(std::string& out) {
    appendf(out,
            "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n"
            "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n",
            kMarginLeft, kMarginTop, kMarginLeft, kHeight - kMarginBottom, kMarginLeft,
            kHeight - kMarginBottom, kWidth - kMarginRight, kHeight - kMarginBottom);
}

} // namespace

std::string svg_weight_histogram(const DiscreteChoquetDistribution& dist,
                                 const std::string& title) {
    std::string out;
    open_svg(out, title);
    axes(out);

    const std::size_t n = dist.atoms.size();
    if (n == 0) {
        appendf(out,
                "<text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"13\">"
                "diffuse: no atoms</text>\n",
                kMarginLeft + 12, (kMarginTop + kHeight - kMarginBottom) / 2);
        out += "</svg>\n";
        return out;
    }

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const double slot = plot_w / static_cast<double>(n);
    const double bar_w = std::max(8.0, slot * 0.6);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = dist.atoms[k].weight;
        const double h = plot_h * w;
        const double x = kMarginLeft + slot * (static_cast<double>(k) + 0.5) - bar_w / 2.0;
        const double y = kHeight - kMarginBottom - h;
        appendf(out,
                "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n", x,
                y, bar_w, h, kPalette[k % 6]);
        appendf(out,
                "<text x=\"%.2f\" y=\"%.2f\" font-family=\"monospace\" font-size=\"11\" "
                "text-anchor=\"middle\">w=%.4f</text>\n",
                x + bar_w / 2.0, y - 6.0, w);
        appendf(out,
                "<text x=\"%.2f\" y=\"%d\" font-family=\"monospace\" font-size=\"11\" "
                "text-anchor=\"middle\">atom %zu</text>\n",
                x + bar_w / 2.0, kHeight - kMarginBottom + 16, k);
    }
    appendf(out,
            "<text x=\"8\" y=\"%d\" font-family=\"monospace\" font-size=\"11\" "
            "transform=\"rotate(-90 8 %d)\">weight</text>\n",
            (kMarginTop + kHeight - kMarginBottom) / 2, (kMarginTop + kHeight - kMarginBottom) / 2);
    out += "</svg>\n";
    return out;
}

std::string svg_trace_plot(const std::vector<std::string>& labels,
                           const std::vector<ConvergenceVerdict>& verdicts,
                           const std::string& title) {
    std::string out;
    open_svg(out, title);
    axes(out);

    std::size_t max_len = 0;
    double max_step = 0.0;
    for (const ConvergenceVerdict& v : verdicts) {
        max_len = std::max(max_len, v.trace.size());
        for (std::size_t t = 1; t < v.trace.size(); ++t) {
            max_step = std::max(max_step, weak_metric(v.trace[t], v.trace[t - 1]));
        }
    }
    if (max_step <= 0.0) max_step = 1.0;
    if (max_len < 2) {
        out += "</svg>\n";
        return out;
    }

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const ConvergenceVerdict& v = verdicts[i];
        if (v.trace.size() < 2) continue;
        std::string pts;
        for (std::size_t t = 1; t < v.trace.size(); ++t) {
            const double step = weak_metric(v.trace[t], v.trace[t - 1]);
            const double fx = static_cast<double>(t - 1) / static_cast<double>(max_len - 2 + 1);
            const double x = kMarginLeft + fx * plot_w;
            const double y = kHeight - kMarginBottom - (step / max_step) * plot_h;
            char buf[48];
            std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", pts.empty() ? "" : " ", x, y);
            pts += buf;
        }
        appendf(out,
                "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"/>\n",
                pts.c_str(), kPalette[i % 6]);
        if (i < labels.size() && i < 12) {
            appendf(out,
                    "<text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"10\" "
                    "fill=\"%s\">%s</text>\n",
                    kWidth - kMarginRight - 180, kMarginTop + 14 * static_cast<int>(i) + 4,
                    kPalette[i % 6], escape_text(labels[i]).c_str());
        }
    }
    appendf(out,
            "<text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"11\">checkpoint</text>\n",
            (kMarginLeft + kWidth - kMarginRight) / 2 - 30, kHeight - 8);
    appendf(out,
            "<text x=\"8\" y=\"%d\" font-family=\"monospace\" font-size=\"11\" "
            "transform=\"rotate(-90 8 %d)\">step rho (max %.3g)</text>\n",
            (kMarginTop + kHeight - kMarginBottom) / 2 + 40,
            (kMarginTop + kHeight - kMarginBottom) / 2 + 40, max_step);
    out += "</svg>\n";
    return out;
}

} // namespace ergodec
