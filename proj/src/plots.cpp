#include "ssa/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace ssa::plot {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

class Svg {
public:
    Svg(double w, double h) {
        out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
             << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n"
             << "<rect x=\"0\" y=\"0\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"#ffffff\"/>\n";
    }
    Svg& rect(double x, double y, double w, double h, const std::string& fill, const std::string& cls = {}) {
        out_ << "<rect";
        if (!cls.empty()) out_ << " class=\"" << cls << '"';
        out_ << " x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
             << "\" fill=\"" << fill << "\"/>\n";
        return *this;
    }
    Svg& line(double x1, double y1, double x2, double y2, const std::string& stroke, const std::string& cls = {}) {
        out_ << "<line";
        if (!cls.empty()) out_ << " class=\"" << cls << '"';
        out_ << " x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
             << "\" stroke=\"" << stroke << "\"/>\n";
        return *this;
    }
    Svg& circle(double cx, double cy, double r, const std::string& fill, const std::string& cls = {}) {
        out_ << "<circle";
        if (!cls.empty()) out_ << " class=\"" << cls << '"';
        out_ << " cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" fill=\"" << fill
             << "\"/>\n";
        return *this;
    }
    Svg& text(double x, double y, const std::string& s, const std::string& anchor = "start",
              const std::string& cls = {}) {
        out_ << "<text";
        if (!cls.empty()) out_ << " class=\"" << cls << '"';
        out_ << " x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" font-size=\"10\""
             << " text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
        return *this;
    }
    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    std::ostringstream out_;
};

std::string empty_plot(const std::string& title) {
    Svg svg(400, 100);
    svg.text(200, 50, title + ": no data", "middle", "notice");
    return svg.finish();
}

void legend(Svg& svg, const std::vector<std::string>& labels, double x, double y) {
    for (std::size_t a = 0; a < labels.size(); ++a) {
        svg.rect(x, y + 14.0 * static_cast<double>(a), 10, 10, state_color(a), "legend");
        svg.text(x + 14, y + 14.0 * static_cast<double>(a) + 9, labels[a]);
    }
}

}  // namespace

const char* state_color(std::size_t state) { return kPalette[state % kPalette.size()]; }

std::string heat_color(double rate) {
    const double t = std::clamp(rate, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255 - t * (255 - 8)));
    const int g = static_cast<int>(std::lround(255 - t * (255 - 48)));
    const int b = static_cast<int>(std::lround(255 - t * (255 - 107)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string state_distribution(const StateDistribution& d) {
    if (d.length == 0 || d.labels.empty()) return empty_plot("state distribution");
    const double left = 40, top = 20, bar = 10, height = 300;
    const double width = left + bar * static_cast<double>(d.length) + 140;
    Svg svg(width, top + height + 40);
    svg.text(left, 14, "State distribution by week");
    const std::size_t a = d.labels.size();
    for (std::size_t t = 0; t < d.length; ++t) {
        double y = top + height;
        for (std::size_t s = 0; s < a; ++s) {
            const double f = d.at(t, static_cast<State>(s));
            if (f <= 0) continue;
            const double h = f * height;
            y -= h;
            svg.rect(left + bar * static_cast<double>(t), y, bar, h, state_color(s), "band");
        }
    }
    svg.line(left, top + height, left + bar * static_cast<double>(d.length), top + height, "#000000");
    svg.text(left + bar * static_cast<double>(d.length) / 2, top + height + 20, "week", "middle");
    legend(svg, d.labels, left + bar * static_cast<double>(d.length) + 10, top);
    return svg.finish();
}

std::string sequence_index(const SequenceSet& set, const Labels& labels) {
    if (set.size() == 0 || set.length() == 0) return empty_plot("sequence index");
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (labels.size() == set.size())
        std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return labels[x] < labels[y]; });
    const double left = 40, top = 20, cell = 6;
    const double row = std::max(0.5, std::min(4.0, 600.0 / static_cast<double>(set.size())));
    const double plot_w = cell * static_cast<double>(set.length());
    Svg svg(left + plot_w + 140, top + row * static_cast<double>(set.size()) + 30);
    svg.text(left, 14, "Sequence index plot");
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& s = set[order[r]];
        const double y = top + row * static_cast<double>(r);
        // Merge runs of equal states into one rect.
        std::size_t t = 0;
        while (t < s.length()) {
            std::size_t end = t;
            while (end < s.length() && s.states[end] == s.states[t]) ++end;
            svg.rect(left + cell * static_cast<double>(t), y, cell * static_cast<double>(end - t), row,
                     state_color(s.states[t]));
            t = end;
        }
    }
    legend(svg, set.alphabet()->symbols(), left + plot_w + 10, top);
    return svg.finish();
}

std::string transition_heatmap(const TransitionMatrix& m) {
    const std::size_t a = m.size();
    if (a == 0) return empty_plot("transition rates");
    const double left = 90, top = 30, cell = 40;
    Svg svg(left + cell * static_cast<double>(a) + 20, top + cell * static_cast<double>(a) + 90);
    svg.text(left, 14, "Transition rates (row = from, column = to)");
    for (std::size_t i = 0; i < a; ++i) {
        svg.text(left - 4, top + cell * (static_cast<double>(i) + 0.6), m.labels[i], "end");
        for (std::size_t j = 0; j < a; ++j) {
            const double r = m.rate(static_cast<State>(i), static_cast<State>(j));
            const double x = left + cell * static_cast<double>(j), y = top + cell * static_cast<double>(i);
            svg.rect(x, y, cell, cell, heat_color(r), "cell");
            svg.text(x + cell / 2, y + cell * 0.6, num(r), "middle");
        }
    }
    for (std::size_t j = 0; j < a; ++j)
        svg.text(left + cell * (static_cast<double>(j) + 0.5), top + cell * static_cast<double>(a) + 14, m.labels[j],
                 "middle");
    return svg.finish();
}

std::string hazard_forest(const CoxModelFit& fit) {
    const std::size_t p = fit.names.size();
    if (p == 0) return empty_plot("hazard ratios");
    double lo = 1.0, hi = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        lo = std::min({lo, fit.ci_low[i], fit.hr[i]});
        hi = std::max({hi, fit.ci_high[i], fit.hr[i]});
    }
    lo = std::max(lo, 1e-3);
    hi = std::min(hi, 1e3);
    const double llo = std::log(lo) - 0.1, lhi = std::log(hi) + 0.1;
    const double left = 140, top = 30, width = 360, row = 22;
    auto xpos = [&](double v) {
        const double lv = std::clamp(std::log(std::max(v, 1e-300)), llo, lhi);
        return left + (lv - llo) / (lhi - llo) * width;
    };
    Svg svg(left + width + 150, top + row * static_cast<double>(p) + 40);
    svg.text(left, 14, "Hazard ratio (95% CI)");
    const double unity = xpos(1.0);
    svg.line(unity, top - 6, unity, top + row * static_cast<double>(p), "#888888", "unity");
    for (std::size_t j = 0; j < p; ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        const double y = top + row * (static_cast<double>(j) + 0.5);
        svg.text(left - 6, y + 3, fit.names[j], "end");
        svg.line(xpos(fit.ci_low[i]), y, xpos(fit.ci_high[i]), y, "#000000", "ci");
        svg.circle(xpos(fit.hr[i]), y, 3.5, "#1f77b4", "hr");
        svg.text(left + width + 8, y + 3,
                 num(fit.hr[i]) + " [" + num(fit.ci_low[i]) + ", " + num(fit.ci_high[i]) + "]");
    }
    svg.text(unity, top + row * static_cast<double>(p) + 16, "1", "middle");
    return svg.finish();
}

}  // namespace ssa::plot
