#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "goldrank/corpus.hpp"
#include "goldrank/rank.hpp"

// Cross-experiment analytics: the examples-by-experiments golden-rank
// matrix, per-example mean/std statistics, BIRCH clustering into difficulty
// classes, and the never-correct slice.

namespace goldrank::fleet {

/// Dense examples-by-experiments table of golden ranks. Complete by
/// construction: every cell is filled. Example ids are kept sorted so runs
/// are reproducible regardless of input order.
struct GrMatrix {
    std::vector<std::string> example_ids;
    std::vector<std::string> experiments;
    std::vector<int> values;  // row-major, one row per example

    int at(std::size_t example, std::size_t experiment) const {
        return values[example * experiments.size() + experiment];
    }
    std::size_t n_examples() const { return example_ids.size(); }
    std::size_t n_experiments() const { return experiments.size(); }
};

struct BuildMatrixResult {
    GrMatrix matrix;
    /// Ids that were missing from at least one run and therefore excluded.
    std::vector<std::string> excluded_ids;
};

/// Intersects the runs' id universes into a complete matrix. Throws on zero
/// runs or an empty intersection.
BuildMatrixResult build_matrix(
    const std::vector<std::pair<std::string, std::vector<rank::GoldenRankRecord>>>&
        runs);

struct ExampleStats {
    std::string example_id;
    double mean = 0.0;
    double stddev = 0.0;  // population std (divide by n)
    bool answerable = true;
};

/// Per-row mean and population standard deviation, with answerability taken
/// from the dataset. Throws when a matrix id is absent from the dataset.
std::vector<ExampleStats> example_stats(const GrMatrix& m,
                                        const corpus::Dataset& dataset);

struct BirchParams {
    double threshold = 0.5;
    int branching = 50;
};

struct BirchResult {
    std::vector<int> cluster_of_point;
    std::vector<std::vector<double>> centroids;
    /// Set when fewer points than requested clusters forced singletons.
    bool degenerate = false;
};

/// BIRCH: CF-tree insertion (count / linear-sum / squared-sum features, leaf
/// absorption under the radius threshold, node splits at the branching
/// factor), agglomerative merging of leaf centroids down to k_clusters by
/// minimal centroid distance, then assignment of every point to the nearest
/// final centroid. Deterministic for a fixed input order.
BirchResult birch_cluster(const std::vector<std::vector<double>>& points,
                          int k_clusters, double threshold, int branching);

/// Feature space fed to the clusterer: the full per-example GR vector across
/// experiments, or the 2-D (mean, std) summary.
enum class ClusterFeatures { Vector, MeanStd };

struct ClusterAssignment {
    std::string example_id;
    int cluster_id = 0;
    std::string label;
};

struct ClusterSummaryRow {
    std::string label;
    std::int64_t count = 0;
    double gr_min = 0.0, gr_max = 0.0;
    double std_min = 0.0, std_max = 0.0;
};

/// Labels clusters and summarizes them in the difficulty-table layout: the
/// cluster holding the (0,0) point splits into "All Correct" (exactly (0,0))
/// and "Mostly Correct" (the remainder); of the remaining clusters the one
/// with the highest-std centroid is "Polarized" and the rest are
/// "Challenges". Fills the label field of each assignment; stats must cover
/// the assigned ids.
std::vector<ClusterSummaryRow> difficulty_classes(
    std::vector<ClusterAssignment>& assignments,
    const std::vector<ExampleStats>& stats);

struct DifficultyResult {
    std::vector<ClusterAssignment> assignments;
    std::vector<ClusterSummaryRow> table;
    bool degenerate = false;
};

/// Full difficulty pipeline for one answerability partition: select the
/// partition's rows, build features, run BIRCH, label, summarize.
DifficultyResult cluster_partition(const GrMatrix& m,
                                   const std::vector<ExampleStats>& stats,
                                   bool answerable, ClusterFeatures features,
                                   int k_clusters, const BirchParams& params);

/// Ids whose row contains no 0: never predicted correctly by any experiment.
std::vector<std::string> never_correct(const GrMatrix& m);

void write_matrix_csv(const GrMatrix& m, std::ostream& out);
GrMatrix read_matrix_csv(const std::string& path);
void write_stats_csv(const std::vector<ExampleStats>& stats, std::ostream& out);

}  // namespace goldrank::fleet
