#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "goldrank/corpus.hpp"
#include "goldrank/fleet.hpp"
#include "goldrank/rank.hpp"
#include "goldrank/spanex.hpp"

// Figure generation and consolidated reporting. Every figure is emitted as
// self-contained SVG text with no plotting dependency; identical inputs
// produce byte-identical files.

namespace goldrank::report {

struct TrainingLogEntry {
    std::int64_t step = 0;
    double em = 0.0;
    double f1 = 0.0;
    std::optional<double> grim;
};

struct FigureSpec {
    std::string title;
    std::vector<std::string> series;  // optional overrides for series labels
};

/// Rank-frequency histogram: one bar group per rank bucket 0..k-1 plus the
/// terminal "k+" bucket, heights as percentages of all examples, and one
/// dotted vertical line per report at its GRIM (omitted when GRIM is null).
std::string gr_histogram_svg(const std::vector<rank::AggregateReport>& reports,
                             const FigureSpec& spec = {});

enum class ScatterColoring { Answerability, EverCorrect, Cluster };

struct ScatterStyle {
    ScatterColoring coloring = ScatterColoring::Answerability;
    /// Ids never predicted correctly; consulted by EverCorrect coloring.
    std::unordered_set<std::string> never_correct_ids;
    /// Difficulty label per id; consulted by Cluster coloring.
    std::unordered_map<std::string, std::string> cluster_label_of;
};

/// Mean-vs-std scatter over examples, axes fixed to [0, k] and [0, k/2].
std::string meanstd_scatter_svg(const std::vector<fleet::ExampleStats>& stats,
                                int k, const ScatterStyle& style = {},
                                const FigureSpec& spec = {});

enum class Metric { Em, F1, Grim, F1MinusEm };

/// One point per experiment; with fit, the least-squares line, the 95%
/// confidence band for the mean response, and Pearson r in the legend.
/// Experiments with a null GRIM are skipped when either axis reads GRIM.
/// Throws std::invalid_argument when fit is requested with fewer than two
/// usable points.
std::string metric_scatter_svg(const std::vector<rank::AggregateReport>& reports,
                               Metric x, Metric y, bool fit,
                               const FigureSpec& spec = {});

/// Dual-axis training curves: EM and F1 on the left scale, GRIM on the
/// right, with the best-F1 step marked. The right axis is omitted when no
/// entry carries a GRIM. Throws std::invalid_argument on fewer than two
/// entries or non-increasing steps.
std::string training_curves_svg(const std::vector<TrainingLogEntry>& log,
                                const FigureSpec& spec = {});

/// Reads a validation log, CSV (`step,em,f1,grim` header, empty grim for
/// null) or JSONL (`{"step","em","f1","grim"}`), detected by content.
std::vector<TrainingLogEntry> load_training_log(const std::string& path);

double pearson(std::span<const double> x, std::span<const double> y);

struct ReportOptions {
    int k = 10;
    double gamma = 1.0;
    rank::MedianConvention convention = rank::MedianConvention::Paper;
    fleet::ClusterFeatures features = fleet::ClusterFeatures::Vector;
    int clusters = 3;
    fleet::BirchParams birch = {};
    std::vector<int> ensemble_sizes = {3, 5};
    std::optional<std::uint64_t> seed;
};

/// One consolidated JSON document: dataset accounting with the discarded
/// section, per-experiment aggregate reports, metric correlations, the
/// never-correct slice, difficulty tables per answerability partition, and
/// majority-vote ensembles selected by EM/F1/GRIM.
std::string consolidated_report_json(
    const corpus::LoadResult& corpus,
    const std::vector<std::pair<std::string, std::vector<spanex::PredictionSet>>>&
        runs,
    const ReportOptions& options = {});

}  // namespace goldrank::report
