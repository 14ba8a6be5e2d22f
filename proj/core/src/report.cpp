#include "goldrank/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "goldrank/ensemble.hpp"
#include "internal_util.hpp"

namespace goldrank::report {

using nlohmann::json;

namespace {

constexpr double kWidth = 800, kHeight = 520;
constexpr double kLeft = 64, kRight = 64, kTop = 48, kBottom = 56;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string num(double v) {
    std::string s = detail::fixed(v, 2);
    return s == "-0.00" ? "0.00" : s;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
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

struct Svg {
    std::ostringstream body;

    explicit Svg(const std::string& title) {
        body << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
             << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
             << kHeight << "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
        body << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" fill=\"white\"/>\n";
        if (!title.empty())
            body << "<text x=\"" << num(kWidth / 2)
                 << "\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">"
                 << xml_escape(title) << "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0, const std::string& dash = {}) {
        body << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
             << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << color
             << "\" stroke-width=\"" << num(width) << "\"";
        if (!dash.empty()) body << " stroke-dasharray=\"" << dash << "\"";
        body << "/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill) {
        body << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
             << num(w) << "\" height=\"" << num(h) << "\" fill=\"" << fill
             << "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& fill) {
        body << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\""
             << num(r) << "\" fill=\"" << fill << "\" fill-opacity=\"0.75\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 12,
              const std::string& anchor = "start", const std::string& fill = "#222") {
        body << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\""
             << size << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill
             << "\">" << xml_escape(s) << "</text>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& color, double width = 1.5,
                  const std::string& dash = {}) {
        if (pts.size() < 2) return;
        body << "<polyline fill=\"none\" stroke=\"" << color
             << "\" stroke-width=\"" << num(width) << "\"";
        if (!dash.empty()) body << " stroke-dasharray=\"" << dash << "\"";
        body << " points=\"";
        for (const auto& [x, y] : pts) body << num(x) << "," << num(y) << " ";
        body << "\"/>\n";
    }
    void polygon(const std::vector<std::pair<double, double>>& pts,
                 const std::string& fill, double opacity) {
        body << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << num(opacity)
             << "\" points=\"";
        for (const auto& [x, y] : pts) body << num(x) << "," << num(y) << " ";
        body << "\"/>\n";
    }
    std::string finish() {
        body << "</svg>\n";
        return body.str();
    }
};

// Linear data->pixel mapping over the plot frame.
struct Scale {
    double lo = 0.0, hi = 1.0;
    double px0 = 0.0, px1 = 1.0;
    double operator()(double v) const {
        return px0 + (v - lo) / (hi - lo) * (px1 - px0);
    }
};

void draw_frame(Svg& svg) {
    svg.line(kLeft, kTop, kLeft, kTop + kPlotH, "#222");
    svg.line(kLeft, kTop + kPlotH, kLeft + kPlotW, kTop + kPlotH, "#222");
}

void y_ticks(Svg& svg, const Scale& sy, int n_ticks, int decimals,
             bool right_side = false, const std::string& color = "#222") {
    for (int i = 0; i <= n_ticks; ++i) {
        const double v = sy.lo + (sy.hi - sy.lo) * i / n_ticks;
        const double y = sy(v);
        if (right_side) {
            svg.line(kLeft + kPlotW, y, kLeft + kPlotW + 4, y, color);
            svg.text(kLeft + kPlotW + 8, y + 4, detail::fixed(v, decimals), 11,
                     "start", color);
        } else {
            svg.line(kLeft - 4, y, kLeft, y, color);
            svg.text(kLeft - 8, y + 4, detail::fixed(v, decimals), 11, "end", color);
        }
    }
}

double t_quantile_975(std::size_t df) {
    static const std::pair<std::size_t, double> table[] = {
        {1, 12.706}, {2, 4.303}, {3, 3.182}, {4, 2.776}, {5, 2.571},
        {6, 2.447},  {7, 2.365}, {8, 2.306}, {9, 2.262}, {10, 2.228},
        {11, 2.201}, {12, 2.179}, {13, 2.160}, {14, 2.145}, {15, 2.131},
        {16, 2.120}, {17, 2.110}, {18, 2.101}, {19, 2.093}, {20, 2.086},
        {21, 2.080}, {22, 2.074}, {23, 2.069}, {24, 2.064}, {25, 2.060},
        {26, 2.056}, {27, 2.052}, {28, 2.048}, {29, 2.045}, {30, 2.042},
        {40, 2.021}, {60, 2.000}, {120, 1.980}};
    if (df == 0) return std::numeric_limits<double>::quiet_NaN();
    const auto* prev = &table[0];
    for (const auto& row : table) {
        if (df == row.first) return row.second;
        if (df < row.first) {
            const double span = static_cast<double>(row.first - prev->first);
            const double frac = static_cast<double>(df - prev->first) / span;
            return prev->second + frac * (row.second - prev->second);
        }
        prev = &row;
    }
    return 1.960;
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Em: return "EM";
        case Metric::F1: return "F1";
        case Metric::Grim: return "GRIM";
        case Metric::F1MinusEm: return "F1-EM";
    }
    return "?";
}

std::optional<double> metric_value(const rank::AggregateReport& r, Metric m) {
    switch (m) {
        case Metric::Em: return r.em;
        case Metric::F1: return r.f1;
        case Metric::Grim: return r.grim;
        case Metric::F1MinusEm: return r.f1 - r.em;
    }
    return std::nullopt;
}

}  // namespace

std::string gr_histogram_svg(const std::vector<rank::AggregateReport>& reports,
                             const FigureSpec& spec) {
    if (reports.empty()) throw std::invalid_argument("no reports to plot");
    const int k = reports.front().k;
    for (const auto& r : reports)
        if (r.k != k) throw std::invalid_argument("reports disagree on k");

    Svg svg(spec.title);
    draw_frame(svg);
    const std::size_t buckets = static_cast<std::size_t>(k) + 1;
    const double slot = kPlotW / buckets;
    const Scale sy{0.0, 100.0, kTop + kPlotH, kTop};
    y_ticks(svg, sy, 10, 0);
    svg.text(18, kTop + kPlotH / 2, "% of examples", 12, "middle");

    for (std::size_t b = 0; b < buckets; ++b) {
        const std::string label =
            b + 1 == buckets ? std::to_string(k) + "+" : std::to_string(b);
        svg.text(kLeft + slot * (b + 0.5), kTop + kPlotH + 18, label, 11, "middle");
    }
    svg.text(kLeft + kPlotW / 2, kTop + kPlotH + 38, "golden rank", 12, "middle");

    const double group_pad = slot * 0.1;
    const double bar_w = (slot - 2 * group_pad) / reports.size();
    for (std::size_t s = 0; s < reports.size(); ++s) {
        const auto& r = reports[s];
        const std::string color = kPalette[s % kPaletteSize];
        for (std::size_t b = 0; b < buckets; ++b) {
            const double pct = 100.0 * r.rank_histogram[b] / r.n_examples;
            const double y = sy(pct);
            svg.rect(kLeft + slot * b + group_pad + bar_w * s, y, bar_w,
                     kTop + kPlotH - y, color);
        }
        if (r.grim) {
            const double x = kLeft + slot * (*r.grim + 0.5);
            svg.line(x, kTop, x, kTop + kPlotH, color, 1.5, "4 3");
        }
    }

    for (std::size_t s = 0; s < reports.size(); ++s) {
        const auto& r = reports[s];
        const std::string label =
            s < spec.series.size() ? spec.series[s] : r.experiment;
        const double y = kTop + 14 + 16 * static_cast<double>(s);
        svg.rect(kLeft + kPlotW - 220, y - 9, 10, 10, kPalette[s % kPaletteSize]);
        svg.text(kLeft + kPlotW - 205, y,
                 label + (r.grim ? "  GRIM " + num(*r.grim) : ""), 11);
    }
    return svg.finish();
}

std::string meanstd_scatter_svg(const std::vector<fleet::ExampleStats>& stats,
                                int k, const ScatterStyle& style,
                                const FigureSpec& spec) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    Svg svg(spec.title);
    draw_frame(svg);
    const Scale sx{0.0, static_cast<double>(k), kLeft, kLeft + kPlotW};
    const Scale sy{0.0, k / 2.0, kTop + kPlotH, kTop};
    y_ticks(svg, sy, k / 2, 1);
    for (int i = 0; i <= k; ++i) {
        svg.line(sx(i), kTop + kPlotH, sx(i), kTop + kPlotH + 4, "#222");
        svg.text(sx(i), kTop + kPlotH + 18, std::to_string(i), 11, "middle");
    }
    svg.text(kLeft + kPlotW / 2, kTop + kPlotH + 38, "golden-rank mean", 12,
             "middle");
    svg.text(18, kTop + kPlotH / 2, "std", 12, "middle");

    const auto color_of = [&](const fleet::ExampleStats& s) -> std::string {
        switch (style.coloring) {
            case ScatterColoring::Answerability:
                return s.answerable ? "#2ca02c" : "#d62728";
            case ScatterColoring::EverCorrect:
                return style.never_correct_ids.count(s.example_id) ? "#d62728"
                                                                   : "#333333";
            case ScatterColoring::Cluster: {
                auto it = style.cluster_label_of.find(s.example_id);
                const std::string label = it == style.cluster_label_of.end()
                                              ? std::string("?")
                                              : it->second;
                if (label == "All Correct") return "#9467bd";
                if (label == "Mostly Correct") return "#1f77b4";
                if (label == "Polarized") return "#ff7f0e";
                if (label == "Challenges") return "#d62728";
                return "#7f7f7f";
            }
        }
        return "#333333";
    };
    for (const auto& s : stats)
        svg.circle(sx(s.mean), sy(s.stddev), 2.2, color_of(s));

    std::vector<std::pair<std::string, std::string>> legend;
    switch (style.coloring) {
        case ScatterColoring::Answerability:
            legend = {{"answerable", "#2ca02c"}, {"unanswerable", "#d62728"}};
            break;
        case ScatterColoring::EverCorrect:
            legend = {{"correct at least once", "#333333"},
                      {"never correct", "#d62728"}};
            break;
        case ScatterColoring::Cluster:
            legend = {{"All Correct", "#9467bd"},
                      {"Mostly Correct", "#1f77b4"},
                      {"Polarized", "#ff7f0e"},
                      {"Challenges", "#d62728"}};
            break;
    }
    for (std::size_t i = 0; i < legend.size(); ++i) {
        const double y = kTop + 14 + 16 * static_cast<double>(i);
        svg.rect(kLeft + kPlotW - 180, y - 9, 10, 10, legend[i].second);
        svg.text(kLeft + kPlotW - 165, y, legend[i].first, 11);
    }
    return svg.finish();
}

std::string metric_scatter_svg(const std::vector<rank::AggregateReport>& reports,
                               Metric x, Metric y, bool fit,
                               const FigureSpec& spec) {
    std::vector<double> xs, ys;
    std::vector<std::string> names;
    for (const auto& r : reports) {
        const auto vx = metric_value(r, x);
        const auto vy = metric_value(r, y);
        if (!vx || !vy) continue;
        xs.push_back(*vx);
        ys.push_back(*vy);
        names.push_back(r.experiment);
    }
    if (xs.empty()) throw std::invalid_argument("no plottable experiments");
    if (fit && xs.size() < 2)
        throw std::invalid_argument("a fit needs at least two points");

    const auto range_of = [](const std::vector<double>& v) {
        double lo = *std::min_element(v.begin(), v.end());
        double hi = *std::max_element(v.begin(), v.end());
        double pad = (hi - lo) * 0.08;
        if (pad == 0.0) pad = std::max(1.0, std::abs(hi) * 0.1);
        return std::pair{lo - pad, hi + pad};
    };
    const auto [xlo, xhi] = range_of(xs);
    const auto [ylo, yhi] = range_of(ys);

    Svg svg(spec.title);
    draw_frame(svg);
    const Scale sx{xlo, xhi, kLeft, kLeft + kPlotW};
    const Scale sy{ylo, yhi, kTop + kPlotH, kTop};
    y_ticks(svg, sy, 8, 2);
    for (int i = 0; i <= 8; ++i) {
        const double v = xlo + (xhi - xlo) * i / 8;
        svg.line(sx(v), kTop + kPlotH, sx(v), kTop + kPlotH + 4, "#222");
        svg.text(sx(v), kTop + kPlotH + 18, detail::fixed(v, 2), 10, "middle");
    }
    svg.text(kLeft + kPlotW / 2, kTop + kPlotH + 38, metric_name(x), 12, "middle");
    svg.text(18, kTop + kPlotH / 2, metric_name(y), 12, "middle");

    if (fit) {
        const std::size_t n = xs.size();
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= n;
        my /= n;
        double sxx = 0, sxy = 0, sse = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        if (sxx > 0) {
            const double slope = sxy / sxx;
            const double intercept = my - slope * mx;
            for (std::size_t i = 0; i < n; ++i) {
                const double resid = ys[i] - (intercept + slope * xs[i]);
                sse += resid * resid;
            }
            // 95% band for the mean response, when residual dof exist.
            if (n > 2) {
                const double s = std::sqrt(sse / (n - 2));
                const double t = t_quantile_975(n - 2);
                constexpr int kSamples = 60;
                std::vector<std::pair<double, double>> upper, lower;
                for (int i = 0; i <= kSamples; ++i) {
                    const double xv = xlo + (xhi - xlo) * i / kSamples;
                    const double half =
                        t * s * std::sqrt(1.0 / n + (xv - mx) * (xv - mx) / sxx);
                    const double yv = intercept + slope * xv;
                    upper.emplace_back(sx(xv), sy(yv + half));
                    lower.emplace_back(sx(xv), sy(yv - half));
                }
                std::vector<std::pair<double, double>> band = upper;
                band.insert(band.end(), lower.rbegin(), lower.rend());
                svg.polygon(band, "#1f77b4", 0.15);
            }
            svg.polyline({{sx(xlo), sy(intercept + slope * xlo)},
                          {sx(xhi), sy(intercept + slope * xhi)}},
                         "#1f77b4", 1.5);
        }
        const double r = pearson(xs, ys);
        svg.text(kLeft + 12, kTop + 16,
                 std::isnan(r) ? std::string("r = n/a") : "r = " + num(r), 12);
    }

    for (std::size_t i = 0; i < xs.size(); ++i)
        svg.circle(sx(xs[i]), sy(ys[i]), 4.0,
                   kPalette[i % kPaletteSize]);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double yy = kTop + 32 + 14 * static_cast<double>(i);
        svg.rect(kLeft + kPlotW - 180, yy - 8, 8, 8, kPalette[i % kPaletteSize]);
        svg.text(kLeft + kPlotW - 168, yy, names[i], 10);
    }
    return svg.finish();
}

std::string training_curves_svg(const std::vector<TrainingLogEntry>& log,
                                const FigureSpec& spec) {
    if (log.size() < 2)
        throw std::invalid_argument("training curves need at least two entries");
    for (std::size_t i = 1; i < log.size(); ++i)
        if (log[i].step <= log[i - 1].step)
            throw std::invalid_argument("training-log steps must strictly increase");

    bool any_grim = false;
    double grim_max = 0.0;
    for (const auto& e : log)
        if (e.grim) {
            any_grim = true;
            grim_max = std::max(grim_max, *e.grim);
        }

    Svg svg(spec.title);
    draw_frame(svg);
    const double step_lo = static_cast<double>(log.front().step);
    const double step_hi = static_cast<double>(log.back().step);
    const Scale sx{step_lo, step_hi, kLeft, kLeft + kPlotW};
    const Scale sy{0.0, 100.0, kTop + kPlotH, kTop};
    y_ticks(svg, sy, 10, 0);
    svg.text(18, kTop + kPlotH / 2, "score", 12, "middle");
    for (int i = 0; i <= 6; ++i) {
        const double v = step_lo + (step_hi - step_lo) * i / 6;
        svg.line(sx(v), kTop + kPlotH, sx(v), kTop + kPlotH + 4, "#222");
        svg.text(sx(v), kTop + kPlotH + 18, detail::fixed(v, 0), 10, "middle");
    }
    svg.text(kLeft + kPlotW / 2, kTop + kPlotH + 38, "optimizer step", 12,
             "middle");

    std::vector<std::pair<double, double>> em_pts, f1_pts;
    for (const auto& e : log) {
        em_pts.emplace_back(sx(static_cast<double>(e.step)), sy(e.em));
        f1_pts.emplace_back(sx(static_cast<double>(e.step)), sy(e.f1));
    }
    svg.polyline(em_pts, kPalette[0]);
    svg.polyline(f1_pts, kPalette[2]);

    Scale sg{};
    if (any_grim) {
        const double hi = grim_max > 0 ? grim_max * 1.1 : 1.0;
        sg = Scale{0.0, hi, kTop + kPlotH, kTop};
        y_ticks(svg, sg, 5, 1, /*right_side=*/true, kPalette[1]);
        svg.text(kWidth - 16, kTop + kPlotH / 2, "GRIM", 12, "middle",
                 kPalette[1]);
        std::vector<std::pair<double, double>> seg;
        for (const auto& e : log) {
            if (e.grim) {
                seg.emplace_back(sx(static_cast<double>(e.step)), sg(*e.grim));
            } else if (seg.size() > 1) {
                svg.polyline(seg, kPalette[1], 1.5, "5 3");
                seg.clear();
            } else {
                seg.clear();
            }
        }
        if (seg.size() > 1) svg.polyline(seg, kPalette[1], 1.5, "5 3");
    }

    // Best-model marker: earliest step attaining the maximum F1.
    std::size_t best = 0;
    for (std::size_t i = 1; i < log.size(); ++i)
        if (log[i].f1 > log[best].f1) best = i;
    const double bx = sx(static_cast<double>(log[best].step));
    svg.line(bx, kTop, bx, kTop + kPlotH, "#7f7f7f", 1.0, "2 3");
    svg.text(bx, kTop - 6, "best F1 @ " + std::to_string(log[best].step), 11,
             "middle", "#555");

    const std::vector<std::pair<std::string, std::string>> legend = {
        {"EM", kPalette[0]},
        {"F1", kPalette[2]},
        {"GRIM (right axis)", kPalette[1]}};
    const std::size_t legend_n = any_grim ? 3 : 2;
    for (std::size_t i = 0; i < legend_n; ++i) {
        const double y = kTop + 14 + 16 * static_cast<double>(i);
        svg.rect(kLeft + 12, y - 9, 10, 10, legend[i].second);
        svg.text(kLeft + 27, y, legend[i].first, 11);
    }
    return svg.finish();
}

std::vector<TrainingLogEntry> load_training_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open training log: " + path);
    std::vector<TrainingLogEntry> log;
    std::string line;
    std::size_t line_no = 0;
    bool jsonl = false, decided = false, header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (!decided) {
            jsonl = line[first] == '{';
            decided = true;
        }
        try {
            TrainingLogEntry e;
            if (jsonl) {
                const json j = json::parse(line);
                e.step = j.at("step").get<std::int64_t>();
                e.em = j.at("em").get<double>();
                e.f1 = j.at("f1").get<double>();
                if (j.contains("grim") && !j.at("grim").is_null())
                    e.grim = j.at("grim").get<double>();
            } else {
                const auto cells = detail::csv_split(line);
                if (!header_seen) {
                    header_seen = true;
                    if (!cells.empty() && cells[0] == "step") continue;
                }
                if (cells.size() < 3)
                    throw std::runtime_error("expected step,em,f1[,grim]");
                e.step = std::stoll(cells[0]);
                e.em = std::stod(cells[1]);
                e.f1 = std::stod(cells[2]);
                if (cells.size() > 3 && !cells[3].empty())
                    e.grim = std::stod(cells[3]);
            }
            log.push_back(e);
        } catch (const std::exception& ex) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                                     ex.what());
        }
    }
    return log;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson needs two equal-length samples");
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

namespace {

json summary_rows_json(const std::vector<fleet::ClusterSummaryRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"cluster", r.label},
                       {"counts", r.count},
                       {"from_gr", r.gr_min},
                       {"to_gr", r.gr_max},
                       {"from_std", r.std_min},
                       {"to_std", r.std_max}});
    return out;
}

std::optional<double> correlation(const std::vector<std::optional<double>>& a,
                                  const std::vector<std::optional<double>>& b) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && b[i]) {
            xs.push_back(*a[i]);
            ys.push_back(*b[i]);
        }
    if (xs.size() < 2) return std::nullopt;
    const double r = pearson(xs, ys);
    if (std::isnan(r)) return std::nullopt;
    return r;
}

json opt_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string consolidated_report_json(
    const corpus::LoadResult& corpus_result,
    const std::vector<std::pair<std::string, std::vector<spanex::PredictionSet>>>&
        runs,
    const ReportOptions& options) {
    if (runs.empty()) throw std::invalid_argument("no experiment runs supplied");
    const corpus::Dataset& dataset = corpus_result.dataset;

    json root;
    {
        auto [answerable, unanswerable] = corpus::split_answerability(dataset);
        json discarded = json::array();
        for (const auto& d : corpus_result.discarded) {
            json issues = json::array();
            for (const auto& i : d.issues)
                issues.push_back(std::string(corpus::issue_name(i.kind)) + ": " +
                                 i.message);
            discarded.push_back({{"id", d.example.id}, {"issues", issues}});
        }
        root["dataset"] = {{"path", dataset.source_path},
                           {"n_examples", dataset.examples.size()},
                           {"n_answerable", answerable.examples.size()},
                           {"n_unanswerable", unanswerable.examples.size()},
                           {"discarded", std::move(discarded)}};
    }
    root["k"] = options.k;
    root["gamma"] = options.gamma;

    std::vector<rank::AggregateReport> reports;
    std::vector<std::pair<std::string, std::vector<rank::GoldenRankRecord>>>
        scored_runs;
    for (const auto& [name, sets] : runs) {
        auto records = rank::score_run(sets, dataset, options.k);
        reports.push_back(rank::aggregate_report(name, records, sets, dataset,
                                                 options.k, options.gamma,
                                                 options.convention));
        scored_runs.emplace_back(name, std::move(records));
    }
    json experiments = json::array();
    for (const auto& r : reports) experiments.push_back(detail::report_json(r));
    root["experiments"] = std::move(experiments);

    {
        std::vector<std::optional<double>> em, f1, grim_v, f1_minus_em;
        for (const auto& r : reports) {
            em.emplace_back(r.em);
            f1.emplace_back(r.f1);
            grim_v.push_back(r.grim);
            f1_minus_em.emplace_back(r.f1 - r.em);
        }
        root["metric_correlations"] = {
            {"f1_vs_em", opt_json(correlation(f1, em))},
            {"grim_vs_em", opt_json(correlation(grim_v, em))},
            {"grim_vs_f1", opt_json(correlation(grim_v, f1))},
            {"grim_vs_f1_minus_em", opt_json(correlation(grim_v, f1_minus_em))}};
    }

    const fleet::BuildMatrixResult built = fleet::build_matrix(scored_runs);
    const std::vector<fleet::ExampleStats> stats =
        fleet::example_stats(built.matrix, dataset);
    const std::vector<std::string> never = fleet::never_correct(built.matrix);
    root["matrix"] = {{"n_examples", built.matrix.n_examples()},
                      {"n_excluded", built.excluded_ids.size()},
                      {"experiments", built.matrix.experiments},
                      {"never_correct",
                       {{"count", never.size()}, {"ids", never}}}};

    {
        json difficulty;
        for (const bool answerable : {true, false}) {
            const char* key = answerable ? "answerable" : "unanswerable";
            const auto n_part = static_cast<std::size_t>(std::count_if(
                stats.begin(), stats.end(), [&](const fleet::ExampleStats& s) {
                    return s.answerable == answerable;
                }));
            if (n_part == 0) {
                difficulty[key] = {{"n_examples", 0}, {"clusters", json::array()}};
                continue;
            }
            const fleet::DifficultyResult part = fleet::cluster_partition(
                built.matrix, stats, answerable, options.features,
                options.clusters, options.birch);
            difficulty[key] = {{"n_examples", n_part},
                               {"clusters", summary_rows_json(part.table)},
                               {"degenerate", part.degenerate}};
        }
        root["difficulty"] = std::move(difficulty);
    }

    {
        json rows = json::array();
        const auto add_row = [&](ensemble::Criterion criterion, const char* name,
                                 int size) {
            ensemble::EnsembleSpec spec;
            spec.criterion = criterion;
            spec.size = size;
            json row{{"criterion", name}, {"size", size}};
            try {
                const auto members =
                    ensemble::select_members(reports, spec, options.seed);
                const auto preds =
                    ensemble::majority_vote(runs, members, options.seed);
                const auto [em, f1] = ensemble::evaluate_ensemble(preds, dataset);
                row["members"] = members;
                row["em"] = em;
                row["f1"] = f1;
            } catch (const std::exception& ex) {
                row["note"] = std::string("skipped: ") + ex.what();
            }
            rows.push_back(std::move(row));
        };
        add_row(ensemble::Criterion::Em, "em", 1);  // best single model baseline
        for (int size : options.ensemble_sizes) {
            if (size < 1 || static_cast<std::size_t>(size) > runs.size()) continue;
            add_row(ensemble::Criterion::Em, "em", size);
            add_row(ensemble::Criterion::F1, "f1", size);
            add_row(ensemble::Criterion::Grim, "grim", size);
        }
        root["ensembles"] = std::move(rows);
    }

    return root.dump(2);
}

}  // namespace goldrank::report
