#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace oracles {

double direct_interpolated_median(std::vector<int> values, bool paper_sign) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    double m;
    if (n % 2 == 1)
        m = values[n / 2];
    else
        m = (values[n / 2 - 1] + values[n / 2]) / 2.0;
    std::size_t below = 0, at = 0, above = 0;
    for (int v : values) {
        if (v < m) ++below;
        if (v > m) ++above;
        if (v == m) ++at;
    }
    if (at == 0) return m;
    const double shift =
        (static_cast<double>(above) - static_cast<double>(below)) / at / 2.0;
    return paper_sign ? m - shift : m + shift;
}

std::vector<std::vector<double>> outer_softmax(const std::vector<double>& start,
                                               const std::vector<double>& end) {
    const auto softmax = [](const std::vector<double>& v) {
        long double denom = 0.0L;
        for (double x : v) denom += expl(static_cast<long double>(x));
        std::vector<long double> out;
        for (double x : v) out.push_back(expl(static_cast<long double>(x)) / denom);
        return out;
    };
    const auto ps = softmax(start);
    const auto pe = softmax(end);
    std::vector<std::vector<double>> grid(ps.size(),
                                          std::vector<double>(pe.size()));
    for (std::size_t j = 0; j < ps.size(); ++j)
        for (std::size_t k = 0; k < pe.size(); ++k)
            grid[j][k] = static_cast<double>(ps[j] * pe[k]);
    return grid;
}

std::vector<BrutePrediction> brute_force_top_k(
    const goldrank::spanex::LogitRecord& rec, const std::string& context, int k,
    int max_answer_tokens, double start_weight, double end_weight,
    double null_threshold) {
    struct Entry {
        double prob;
        std::size_t start_token, end_token, window;
        int begin, end;  // -1,-1 for the no-answer span
    };
    std::map<std::pair<int, int>, Entry> merged;
    long double null_logits = std::numeric_limits<long double>::infinity();
    long double best_span_logits = -std::numeric_limits<long double>::infinity();
    bool has_null = false, has_span = false;

    for (std::size_t wi = 0; wi < rec.windows.size(); ++wi) {
        const auto& w = rec.windows[wi];
        const std::size_t n = w.start_logits.size();
        long double denom = 0.0L;
        for (std::size_t q = 0; q < n; ++q)
            for (std::size_t r = 0; r < n; ++r)
                denom += expl(start_weight * w.start_logits[q] +
                              end_weight * w.end_logits[r]);
        const auto prob_of = [&](std::size_t j, std::size_t kk) {
            return static_cast<double>(expl(start_weight * w.start_logits[j] +
                                            end_weight * w.end_logits[kk]) /
                                       denom);
        };
        const auto consider = [&](std::size_t j, std::size_t kk, int cb, int ce) {
            const Entry e{prob_of(j, kk), j, kk, wi, cb, ce};
            auto [it, inserted] = merged.emplace(std::pair{cb, ce}, e);
            if (!inserted && e.prob > it->second.prob) it->second = e;
        };
        for (std::size_t j = 0; j < n; ++j) {
            if (!w.token_char_offsets[j]) continue;
            for (std::size_t kk = j;
                 kk < n && kk - j <= static_cast<std::size_t>(max_answer_tokens);
                 ++kk) {
                if (!w.token_char_offsets[kk]) continue;
                has_span = true;
                best_span_logits =
                    std::max(best_span_logits,
                             static_cast<long double>(
                                 start_weight * w.start_logits[j] +
                                 end_weight * w.end_logits[kk]));
                consider(j, kk, w.token_char_offsets[j]->begin,
                         w.token_char_offsets[kk]->end);
            }
        }
        if (w.null_position) {
            has_null = true;
            const std::size_t np = *w.null_position;
            null_logits = std::min(
                null_logits,
                static_cast<long double>(start_weight * w.start_logits[np] +
                                         end_weight * w.end_logits[np]));
            consider(np, np, -1, -1);
        }
    }

    std::vector<Entry> ranked;
    for (const auto& [span, e] : merged) ranked.push_back(e);
    std::sort(ranked.begin(), ranked.end(), [](const Entry& a, const Entry& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return std::tie(a.start_token, a.end_token, a.window) <
               std::tie(b.start_token, b.end_token, b.window);
    });
    if (has_null && has_span &&
        static_cast<double>(null_logits - best_span_logits) > null_threshold) {
        auto it = std::find_if(ranked.begin(), ranked.end(),
                               [](const Entry& e) { return e.begin < 0; });
        Entry null_entry = *it;
        ranked.erase(it);
        ranked.insert(ranked.begin(), null_entry);
    }
    if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(k);

    std::vector<BrutePrediction> out;
    for (const Entry& e : ranked) {
        BrutePrediction p;
        p.probability = e.prob;
        if (e.begin >= 0)
            p.text = context.substr(e.begin, e.end - e.begin);  // ASCII contexts
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<int> single_linkage_clusters(
    const std::vector<std::vector<double>>& points, int k) {
    const std::size_t n = points.size();
    std::vector<int> cluster(n);
    for (std::size_t i = 0; i < n; ++i) cluster[i] = static_cast<int>(i);
    const auto dist = [&](std::size_t a, std::size_t b) {
        double d = 0;
        for (std::size_t i = 0; i < points[a].size(); ++i)
            d += (points[a][i] - points[b][i]) * (points[a][i] - points[b][i]);
        return d;
    };
    int n_clusters = static_cast<int>(n);
    while (n_clusters > k) {
        double best = std::numeric_limits<double>::infinity();
        int merge_a = -1, merge_b = -1;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (cluster[a] == cluster[b]) continue;
                const double d = dist(a, b);
                if (d < best) {
                    best = d;
                    merge_a = cluster[a];
                    merge_b = cluster[b];
                }
            }
        for (std::size_t i = 0; i < n; ++i)
            if (cluster[i] == merge_b) cluster[i] = merge_a;
        --n_clusters;
    }
    return cluster;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    std::map<std::pair<int, int>, long long> cells;
    std::map<int, long long> row_sum, col_sum;
    for (std::size_t i = 0; i < n; ++i) {
        ++cells[{a[i], b[i]}];
        ++row_sum[a[i]];
        ++col_sum[b[i]];
    }
    const auto choose2 = [](long long v) { return v * (v - 1) / 2.0; };
    double index = 0, rows = 0, cols = 0;
    for (const auto& [key, v] : cells) index += choose2(v);
    for (const auto& [key, v] : row_sum) rows += choose2(v);
    for (const auto& [key, v] : col_sum) cols += choose2(v);
    const double total = choose2(static_cast<long long>(n));
    const double expected = rows * cols / total;
    const double max_index = (rows + cols) / 2.0;
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double direct_pearson(const std::vector<double>& x, const std::vector<double>& y) {
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
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracles
