#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "goldrank/corpus.hpp"
#include "goldrank/rank.hpp"
#include "goldrank/spanex.hpp"

// Majority-vote ensembling over experiments, with member selection by best
// EM, F1, or GRIM. Ballots are cast on normalized answer text so that
// normalization-equivalent surface forms never split a majority.

namespace goldrank::ensemble {

enum class Criterion { Em, F1, Grim };

struct EnsembleSpec {
    Criterion criterion = Criterion::F1;
    int size = 3;
    /// GRIM selects the lowest values by default; flip for experimentation.
    bool grim_lower_is_better = true;
};

/// Top `size` experiments by the criterion (EM/F1 maximize, GRIM minimizes
/// unless flipped). Ties break by F1 and then by name; when `seed` is
/// engaged, tied candidates are instead ordered by a seeded shuffle.
/// Throws when size exceeds the report count or when the GRIM criterion
/// meets a report without secondary predictions.
std::vector<std::string> select_members(
    const std::vector<rank::AggregateReport>& reports, const EnsembleSpec& spec,
    std::optional<std::uint64_t> seed = std::nullopt);

struct EnsemblePrediction {
    std::string example_id;
    std::string text;
    int votes = 0;
    std::vector<std::string> supporters;
};

/// Per example, each member casts its rank-0 text keyed by normalized form;
/// the plurality answer wins and is emitted as the highest-probability
/// surface form among its supporters. Vote ties break by highest mean
/// probability, then lexicographic normalized text (or by seeded shuffle
/// when `seed` is engaged). Throws when a member lacks a prediction for some
/// id covered by the other members.
std::vector<EnsemblePrediction> majority_vote(
    const std::vector<std::pair<std::string, std::vector<spanex::PredictionSet>>>&
        runs,
    const std::vector<std::string>& members,
    std::optional<std::uint64_t> seed = std::nullopt);

/// Standard EM/F1 (percentages) of the ensemble answers over the dataset.
/// Throws when a dataset id has no ensemble prediction.
std::pair<double, double> evaluate_ensemble(
    const std::vector<EnsemblePrediction>& preds,
    const corpus::Dataset& dataset);

/// Re-encodes ensemble answers in the top-K prediction format (single-entry
/// lists, probability = vote share) so they can be fed back through scoring.
std::vector<spanex::PredictionSet> to_prediction_sets(
    const std::vector<EnsemblePrediction>& preds, int member_count);

}  // namespace goldrank::ensemble
