#include "goldrank/spanex.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "goldrank/textnorm.hpp"
#include "goldrank/unicode.hpp"

namespace goldrank::spanex {

using nlohmann::json;

namespace {

void check_window(const Window& w) {
    const std::size_t n = w.start_logits.size();
    if (n == 0) throw std::invalid_argument("window has no positions");
    if (w.end_logits.size() != n || w.token_char_offsets.size() != n)
        throw std::invalid_argument(
            "window logit/offset vectors have mismatched lengths");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(w.start_logits[i]) || !std::isfinite(w.end_logits[i]))
            throw std::invalid_argument("window contains non-finite logits");
    if (w.null_position && *w.null_position >= n)
        throw std::invalid_argument("null_position outside the window");
}

bool is_context_position(const Window& w, std::size_t i) {
    return w.token_char_offsets[i].has_value();
}

}  // namespace

std::vector<SpanCandidate> joint_span_scores(const Window& w,
                                             int max_answer_tokens,
                                             SpanWeights weights) {
    check_window(w);
    if (max_answer_tokens < 0)
        throw std::invalid_argument("max_answer_tokens must be >= 0");
    const std::size_t n = w.start_logits.size();

    // The full-grid denominator factorizes into independent start and end
    // sums; stabilize each with its own max.
    double start_max = -std::numeric_limits<double>::infinity();
    double end_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        start_max = std::max(start_max, weights.start * w.start_logits[i]);
        end_max = std::max(end_max, weights.end * w.end_logits[i]);
    }
    double start_sum = 0.0, end_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        start_sum += std::exp(weights.start * w.start_logits[i] - start_max);
        end_sum += std::exp(weights.end * w.end_logits[i] - end_max);
    }
    const double denom = start_sum * end_sum;

    const auto pair_probability = [&](std::size_t j, std::size_t k) {
        return std::exp(weights.start * w.start_logits[j] - start_max) *
               std::exp(weights.end * w.end_logits[k] - end_max) / denom;
    };

    std::vector<SpanCandidate> out;
    const std::size_t band = static_cast<std::size_t>(max_answer_tokens);
    for (std::size_t j = 0; j < n; ++j) {
        if (!is_context_position(w, j)) continue;
        const std::size_t k_last = std::min(n - 1, j + band);
        for (std::size_t k = j; k <= k_last; ++k) {
            if (!is_context_position(w, k)) continue;
            SpanCandidate c;
            c.start_token = j;
            c.end_token = k;
            c.probability = pair_probability(j, k);
            c.char_span = CharSpan{w.token_char_offsets[j]->begin,
                                   w.token_char_offsets[k]->end};
            out.push_back(std::move(c));
        }
    }
    if (w.null_position) {
        SpanCandidate c;
        c.start_token = *w.null_position;
        c.end_token = *w.null_position;
        c.probability = pair_probability(*w.null_position, *w.null_position);
        out.push_back(std::move(c));
    }
    return out;
}

PredictionSet top_k_predictions(const LogitRecord& rec,
                                std::string_view context, int k,
                                int max_answer_tokens, SpanWeights weights,
                                double null_threshold) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    struct Pooled {
        double probability;
        std::size_t start_token, end_token, window;
    };
    // Merge key: the character span; (-1,-1) stands for the no-answer span.
    std::map<std::pair<std::int32_t, std::int32_t>, Pooled> pooled;
    double null_logit_sum = std::numeric_limits<double>::infinity();
    bool has_null = false;
    double best_span_logit_sum = -std::numeric_limits<double>::infinity();

    for (std::size_t wi = 0; wi < rec.windows.size(); ++wi) {
        const Window& w = rec.windows[wi];
        for (SpanCandidate& c : joint_span_scores(w, max_answer_tokens, weights)) {
            const std::pair<std::int32_t, std::int32_t> key =
                c.char_span ? std::pair{c.char_span->begin, c.char_span->end}
                            : std::pair<std::int32_t, std::int32_t>{-1, -1};
            if (!c.char_span) {
                has_null = true;
            } else {
                best_span_logit_sum =
                    std::max(best_span_logit_sum,
                             weights.start * w.start_logits[c.start_token] +
                                 weights.end * w.end_logits[c.end_token]);
            }
            const Pooled entry{c.probability, c.start_token, c.end_token, wi};
            auto [it, inserted] = pooled.emplace(key, entry);
            if (!inserted && entry.probability > it->second.probability)
                it->second = entry;
        }
        if (w.null_position)
            null_logit_sum = std::min(
                null_logit_sum,
                weights.start * w.start_logits[*w.null_position] +
                    weights.end * w.end_logits[*w.null_position]);
    }

    struct Ranked {
        std::pair<std::int32_t, std::int32_t> span;
        Pooled p;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(pooled.size());
    for (const auto& [span, p] : pooled) ranked.push_back({span, p});
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.p.probability != b.p.probability)
            return a.p.probability > b.p.probability;
        return std::tie(a.p.start_token, a.p.end_token, a.p.window) <
               std::tie(b.p.start_token, b.p.end_token, b.p.window);
    });

    const bool null_wins =
        has_null && std::isfinite(best_span_logit_sum) &&
        null_logit_sum - best_span_logit_sum > null_threshold;
    if (null_wins) {
        auto it = std::find_if(ranked.begin(), ranked.end(), [](const Ranked& r) {
            return r.span == std::pair<std::int32_t, std::int32_t>{-1, -1};
        });
        std::rotate(ranked.begin(), it, it + 1);
    }
    if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(k);

    PredictionSet set;
    set.example_id = rec.example_id;
    set.k = k;
    const std::size_t context_chars = unicode::char_count(context);
    for (const Ranked& r : ranked) {
        Prediction p;
        p.probability = r.p.probability;
        if (r.span.first >= 0) {
            if (r.span.second < r.span.first ||
                static_cast<std::size_t>(r.span.second) > context_chars)
                throw std::runtime_error(
                    rec.example_id + ": token offsets [" +
                    std::to_string(r.span.first) + ", " +
                    std::to_string(r.span.second) + ") exceed context of " +
                    std::to_string(context_chars) + " characters");
            p.char_span = CharSpan{r.span.first, r.span.second};
            p.text = unicode::substr_chars(context, r.span.first, r.span.second);
        }
        set.predictions.push_back(std::move(p));
    }
    return set;
}

namespace {

Window window_from_json(const json& j) {
    Window w;
    w.start_logits = j.at("start_logits").get<std::vector<double>>();
    w.end_logits = j.at("end_logits").get<std::vector<double>>();
    for (const auto& o : j.at("offsets")) {
        if (o.is_null())
            w.token_char_offsets.push_back(std::nullopt);
        else
            w.token_char_offsets.push_back(
                CharSpan{o.at(0).get<std::int32_t>(), o.at(1).get<std::int32_t>()});
    }
    if (j.contains("null_position") && !j.at("null_position").is_null()) {
        const auto np = j.at("null_position").get<std::int64_t>();
        if (np >= 0) w.null_position = static_cast<std::size_t>(np);
    }
    if (w.null_position && *w.null_position < w.token_char_offsets.size() &&
        w.token_char_offsets[*w.null_position].has_value())
        throw std::runtime_error(
            "null_position must have a null offsets entry");
    return w;
}

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(json::parse(line));
        } catch (const std::exception& ex) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": " + ex.what());
        }
    }
}

}  // namespace

std::vector<LogitRecord> load_logit_records(const std::string& path) {
    std::vector<LogitRecord> records;
    for_each_jsonl(path, [&](const json& j) {
        LogitRecord rec;
        rec.example_id = j.at("id").get<std::string>();
        for (const auto& w : j.at("windows")) {
            Window win = window_from_json(w);
            check_window(win);
            rec.windows.push_back(std::move(win));
        }
        if (rec.windows.empty())
            throw std::runtime_error("record has no windows");
        records.push_back(std::move(rec));
    });
    return records;
}

std::vector<PredictionSet> load_prediction_file(const std::string& path) {
    std::vector<PredictionSet> sets;
    for_each_jsonl(path, [&](const json& j) {
        PredictionSet set;
        set.example_id = j.at("id").get<std::string>();
        for (const auto& pj : j.at("predictions")) {
            Prediction p;
            p.text = pj.at("text").get<std::string>();
            p.probability = pj.at("probability").get<double>();
            if (!std::isfinite(p.probability) || p.probability < 0.0 ||
                p.probability > 1.0)
                throw std::runtime_error("probability " +
                                         std::to_string(p.probability) +
                                         " outside [0, 1]");
            const bool has_start =
                pj.contains("start_char") && !pj.at("start_char").is_null();
            const bool has_end =
                pj.contains("end_char") && !pj.at("end_char").is_null();
            if (has_start && has_end) {
                const auto b = pj.at("start_char").get<std::int32_t>();
                const auto e = pj.at("end_char").get<std::int32_t>();
                if (b >= 0 && e >= b) p.char_span = CharSpan{b, e};
            }
            set.predictions.push_back(std::move(p));
        }
        for (std::size_t r = 1; r < set.predictions.size(); ++r)
            if (set.predictions[r].probability >
                set.predictions[r - 1].probability)
                throw std::runtime_error(
                    "probabilities not non-increasing at rank " +
                    std::to_string(r) + " of id " + set.example_id);
        // Duplicate guard: identical concrete char spans (which imply
        // identical text), or two no-answer entries.
        for (std::size_t a = 0; a < set.predictions.size(); ++a)
            for (std::size_t b = a + 1; b < set.predictions.size(); ++b) {
                const auto& pa = set.predictions[a];
                const auto& pb = set.predictions[b];
                const bool dup_span =
                    pa.char_span && pb.char_span && *pa.char_span == *pb.char_span;
                const bool dup_null =
                    !pa.char_span && !pb.char_span &&
                    textnorm::normalize(pa.text).value.empty() &&
                    textnorm::normalize(pb.text).value.empty();
                if (dup_span || dup_null)
                    throw std::runtime_error("duplicate prediction span at ranks " +
                                             std::to_string(a) + " and " +
                                             std::to_string(b) + " of id " +
                                             set.example_id);
            }
        set.k = static_cast<int>(set.predictions.size());
        sets.push_back(std::move(set));
    });
    return sets;
}

void write_prediction_file(const std::vector<PredictionSet>& sets,
                           std::ostream& out) {
    for (const PredictionSet& set : sets) {
        json preds = json::array();
        for (const Prediction& p : set.predictions) {
            json pj{{"text", p.text}, {"probability", p.probability}};
            if (p.char_span) {
                pj["start_char"] = p.char_span->begin;
                pj["end_char"] = p.char_span->end;
            } else {
                pj["start_char"] = nullptr;
                pj["end_char"] = nullptr;
            }
            preds.push_back(std::move(pj));
        }
        out << json{{"id", set.example_id}, {"predictions", std::move(preds)}}
                   .dump()
            << '\n';
    }
}

}  // namespace goldrank::spanex
