#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "goldrank/corpus.hpp"
#include "goldrank/spanex.hpp"

// Golden Rank computation and aggregate rank statistics. The Golden Rank of
// an example is the lowest rank, in descending-probability order, whose
// prediction exactly matches a golden answer; rank 0 therefore coincides with
// an exact match, and examples with no match inside the top-K cap are
// assigned rank K.

namespace goldrank::rank {

struct GoldenRankRecord {
    std::string example_id;
    int gr = 0;
    bool capped = false;
    std::optional<std::string> matched_text;
};

/// Eq.-as-printed interpolated-median sign vs the textbook direction; see
/// interpolated_median.
enum class MedianConvention { Paper, Standard };

/// Lowest rank whose prediction text exactly matches any golden answer of e
/// (the empty prediction matches an unanswerable example). gr = k and
/// capped = true when no match exists within the first k predictions.
/// Throws std::invalid_argument when ids disagree.
GoldenRankRecord golden_rank(const spanex::PredictionSet& p,
                             const corpus::Example& e, int k);

/// Interpolated median of an integer multiset. With m the plain median and
/// i/j/k the counts of values below/at/above m, returns m - ((k - i) / j) / 2
/// under MedianConvention::Paper and m + ((k - i) / j) / 2 under Standard.
/// When the sample median falls between two distinct values (j = 0) the
/// plain median is returned unchanged. Throws std::invalid_argument on empty
/// input.
double interpolated_median(std::span<const int> values,
                           MedianConvention convention = MedianConvention::Paper);

/// Golden Rank Interpolated Median: interpolated median over secondary
/// records only (gr > 0). Disengaged when every record is an exact match.
std::optional<double> grim(const std::vector<GoldenRankRecord>& records,
                           MedianConvention convention = MedianConvention::Paper);

struct RankAggregates {
    /// Mean of all golden ranks. Biased by the K cap: every rank beyond the
    /// collected top-K collapses onto K.
    double grm = 0.0;
    /// Mean of r^(-gamma) over secondary ranks (a proximity score, higher
    /// means closer to rank 0). Disengaged without secondary records.
    std::optional<double> dgrm;
    /// dgrm at gamma = 1.
    std::optional<double> farr;
    /// Mean of 1/(gr+1) over all records; 1 iff every record is rank 0.
    double mrr = 0.0;
};

RankAggregates rank_aggregates(const std::vector<GoldenRankRecord>& records,
                               double gamma);

struct AggregateReport {
    std::string experiment;
    double em = 0.0;  // percentage
    double f1 = 0.0;  // percentage
    std::optional<double> grim;
    double grm = 0.0;
    std::optional<double> dgrm;
    std::optional<double> farr;
    double mrr = 0.0;
    double gamma = 1.0;
    int k = 0;
    /// Counts for ranks 0..k-1 plus a terminal "k+" bucket; sums to n_examples.
    std::vector<std::int64_t> rank_histogram;
    std::int64_t n_examples = 0;
    std::int64_t n_secondary = 0;
};

/// Scores one experiment against a dataset. records and predictions must
/// cover every dataset id (extra ids are ignored); throws on missing ids or
/// an empty dataset.
AggregateReport aggregate_report(
    const std::string& experiment,
    const std::vector<GoldenRankRecord>& records,
    const std::vector<spanex::PredictionSet>& predictions,
    const corpus::Dataset& dataset, int k, double gamma,
    MedianConvention convention = MedianConvention::Paper);

/// Convenience: golden_rank over every dataset example. predictions must
/// cover the dataset ids.
std::vector<GoldenRankRecord> score_run(
    const std::vector<spanex::PredictionSet>& predictions,
    const corpus::Dataset& dataset, int k);

void write_gr_csv(const std::vector<GoldenRankRecord>& records,
                  std::ostream& out);
void write_gr_jsonl(const std::vector<GoldenRankRecord>& records,
                    std::ostream& out);

std::string to_json(const AggregateReport& report);
std::string to_table(const std::vector<AggregateReport>& reports);

}  // namespace goldrank::rank
