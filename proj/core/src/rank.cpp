#include "goldrank/rank.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "goldrank/textnorm.hpp"
#include "internal_util.hpp"

namespace goldrank::rank {

GoldenRankRecord golden_rank(const spanex::PredictionSet& p,
                             const corpus::Example& e, int k) {
    if (p.example_id != e.id)
        throw std::invalid_argument("id mismatch: predictions for \"" +
                                    p.example_id + "\" scored against \"" +
                                    e.id + "\"");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const std::vector<std::string> goldens = e.golden_texts();
    GoldenRankRecord rec;
    rec.example_id = e.id;
    const std::size_t limit =
        std::min(p.predictions.size(), static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < limit; ++r) {
        if (textnorm::exact_match(p.predictions[r].text, goldens)) {
            rec.gr = static_cast<int>(r);
            rec.matched_text = p.predictions[r].text;
            return rec;
        }
    }
    rec.gr = k;
    rec.capped = true;
    return rec;
}

double interpolated_median(std::span<const int> values,
                           MedianConvention convention) {
    if (values.empty())
        throw std::invalid_argument("interpolated_median of an empty list");
    std::vector<int> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    double m;
    if (n % 2 == 1) {
        m = sorted[n / 2];
    } else {
        m = (static_cast<double>(sorted[n / 2 - 1]) + sorted[n / 2]) / 2.0;
        // Median between two distinct values: no sample attains it, the
        // interpolation counts are undefined, keep the plain median.
        if (sorted[n / 2 - 1] != sorted[n / 2]) return m;
    }

    std::size_t below = 0, at = 0, above = 0;
    for (int v : sorted) {
        if (v < m) ++below;
        else if (v > m) ++above;
        else ++at;
    }
    const double shift =
        (static_cast<double>(above) - static_cast<double>(below)) / at / 2.0;
    return convention == MedianConvention::Paper ? m - shift : m + shift;
}

std::optional<double> grim(const std::vector<GoldenRankRecord>& records,
                           MedianConvention convention) {
    std::vector<int> secondary;
    for (const auto& r : records)
        if (r.gr > 0) secondary.push_back(r.gr);
    if (secondary.empty()) return std::nullopt;
    return interpolated_median(secondary, convention);
}

RankAggregates rank_aggregates(const std::vector<GoldenRankRecord>& records,
                               double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be > 0");
    RankAggregates agg;
    if (records.empty()) return agg;
    double gr_sum = 0.0, reciprocal_sum = 0.0;
    double discount_sum = 0.0, farr_sum = 0.0;
    std::size_t n_secondary = 0;
    for (const auto& r : records) {
        gr_sum += r.gr;
        reciprocal_sum += 1.0 / (r.gr + 1.0);
        if (r.gr > 0) {
            ++n_secondary;
            discount_sum += std::pow(static_cast<double>(r.gr), -gamma);
            farr_sum += 1.0 / r.gr;
        }
    }
    agg.grm = gr_sum / records.size();
    agg.mrr = reciprocal_sum / records.size();
    if (n_secondary > 0) {
        agg.dgrm = discount_sum / n_secondary;
        agg.farr = farr_sum / n_secondary;
    }
    return agg;
}

std::vector<GoldenRankRecord> score_run(
    const std::vector<spanex::PredictionSet>& predictions,
    const corpus::Dataset& dataset, int k) {
    std::unordered_map<std::string, const spanex::PredictionSet*> by_id;
    by_id.reserve(predictions.size());
    for (const auto& p : predictions) by_id.emplace(p.example_id, &p);
    std::vector<GoldenRankRecord> records;
    records.reserve(dataset.examples.size());
    for (const corpus::Example& e : dataset.examples) {
        auto it = by_id.find(e.id);
        if (it == by_id.end())
            throw std::runtime_error("no predictions for example id \"" + e.id +
                                     "\"");
        records.push_back(golden_rank(*it->second, e, k));
    }
    return records;
}

AggregateReport aggregate_report(
    const std::string& experiment,
    const std::vector<GoldenRankRecord>& records,
    const std::vector<spanex::PredictionSet>& predictions,
    const corpus::Dataset& dataset, int k, double gamma,
    MedianConvention convention) {
    if (records.empty()) throw std::invalid_argument("no records to aggregate");
    if (dataset.examples.empty())
        throw std::invalid_argument("empty dataset");
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    std::unordered_map<std::string, const GoldenRankRecord*> rec_by_id;
    for (const auto& r : records) rec_by_id.emplace(r.example_id, &r);
    std::unordered_map<std::string, const spanex::PredictionSet*> pred_by_id;
    for (const auto& p : predictions) pred_by_id.emplace(p.example_id, &p);

    AggregateReport report;
    report.experiment = experiment;
    report.gamma = gamma;
    report.k = k;
    report.rank_histogram.assign(static_cast<std::size_t>(k) + 1, 0);

    std::vector<GoldenRankRecord> covered;
    covered.reserve(dataset.examples.size());
    double f1_sum = 0.0;
    std::int64_t em_count = 0;
    for (const corpus::Example& e : dataset.examples) {
        auto rit = rec_by_id.find(e.id);
        if (rit == rec_by_id.end())
            throw std::runtime_error("no golden-rank record for example id \"" +
                                     e.id + "\"");
        auto pit = pred_by_id.find(e.id);
        if (pit == pred_by_id.end())
            throw std::runtime_error("no predictions for example id \"" + e.id +
                                     "\"");
        const GoldenRankRecord& rec = *rit->second;
        covered.push_back(rec);
        const int bucket = std::clamp(rec.gr, 0, k);
        ++report.rank_histogram[static_cast<std::size_t>(bucket)];
        if (rec.gr == 0) ++em_count;
        const auto& preds = pit->second->predictions;
        const std::string primary = preds.empty() ? std::string{} : preds[0].text;
        f1_sum += textnorm::token_f1(primary, e.golden_texts());
    }

    report.n_examples = static_cast<std::int64_t>(covered.size());
    report.n_secondary =
        static_cast<std::int64_t>(std::count_if(covered.begin(), covered.end(),
                                                [](const GoldenRankRecord& r) {
                                                    return r.gr > 0;
                                                }));
    report.em = 100.0 * em_count / report.n_examples;
    report.f1 = 100.0 * f1_sum / report.n_examples;
    report.grim = grim(covered, convention);
    const RankAggregates agg = rank_aggregates(covered, gamma);
    report.grm = agg.grm;
    report.dgrm = agg.dgrm;
    report.farr = agg.farr;
    report.mrr = agg.mrr;
    return report;
}

void write_gr_csv(const std::vector<GoldenRankRecord>& records,
                  std::ostream& out) {
    out << "id,gr,capped,matched_text\n";
    for (const auto& r : records) {
        out << detail::csv_escape(r.example_id) << ',' << r.gr << ','
            << (r.capped ? "true" : "false") << ','
            << (r.matched_text ? detail::csv_escape(*r.matched_text) : "")
            << '\n';
    }
}

void write_gr_jsonl(const std::vector<GoldenRankRecord>& records,
                    std::ostream& out) {
    for (const auto& r : records) {
        nlohmann::json j{{"id", r.example_id}, {"gr", r.gr}, {"capped", r.capped}};
        j["matched_text"] =
            r.matched_text ? nlohmann::json(*r.matched_text) : nlohmann::json(nullptr);
        out << j.dump() << '\n';
    }
}

std::string to_json(const AggregateReport& report) {
    return detail::report_json(report).dump(2);
}

std::string to_table(const std::vector<AggregateReport>& reports) {
    std::ostringstream out;
    const auto cell = [](const std::optional<double>& v) {
        return v ? detail::fixed(*v, 2) : std::string("-");
    };
    std::size_t name_width = 10;
    for (const auto& r : reports) name_width = std::max(name_width, r.experiment.size());
    const auto pad = [&](const std::string& s, std::size_t w) {
        std::string p = s;
        if (p.size() < w) p.append(w - p.size(), ' ');
        return p;
    };
    out << pad("experiment", name_width) << "      em      f1    grim"
        << "  grm (cap-biased)    dgrm    farr     mrr        n   n_sec\n";
    for (const auto& r : reports) {
        out << pad(r.experiment, name_width) << "  " << pad(detail::fixed(r.em, 2), 6)
            << "  " << pad(detail::fixed(r.f1, 2), 6) << "  " << pad(cell(r.grim), 6)
            << "  " << pad(detail::fixed(r.grm, 2), 16) << "  " << pad(cell(r.dgrm), 6)
            << "  " << pad(cell(r.farr), 6) << "  " << pad(detail::fixed(r.mrr, 4), 6)
            << "  " << pad(std::to_string(r.n_examples), 7) << " "
            << std::to_string(r.n_secondary) << '\n';
    }
    return out.str();
}

}  // namespace goldrank::rank
