#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

// Answer-string comparison layer: normalization, the exact-match predicate,
// and bag-of-tokens F1. Everything downstream (golden ranks, ensembles)
// compares answer text through these functions and nothing else.

namespace goldrank::textnorm {

/// Canonical comparison form of an answer string: lowercased, punctuation
/// stripped, bare articles ("a", "an", "the") dropped, whitespace collapsed
/// to single spaces with no leading/trailing run. Normalization is
/// idempotent.
struct NormalizedText {
    std::string value;

    auto operator<=>(const NormalizedText&) const = default;
};

NormalizedText normalize(std::string_view raw);

/// Whitespace tokens of the normalized form.
std::vector<std::string> normalized_tokens(std::string_view raw);

/// True iff the normalized prediction equals some normalized golden answer.
/// An empty golden list encodes an unanswerable question, matched only by a
/// prediction that normalizes to the empty string.
bool exact_match(std::string_view prediction,
                 const std::vector<std::string>& goldens);

/// Max over goldens of the harmonic mean of bag-of-tokens precision/recall.
/// Duplicate tokens count min(pred_count, gold_count). Against an empty
/// golden list the score is 1 when the prediction normalizes to empty and 0
/// otherwise; the same rule applies whenever either token bag is empty.
double token_f1(std::string_view prediction,
                const std::vector<std::string>& goldens);

}  // namespace goldrank::textnorm
