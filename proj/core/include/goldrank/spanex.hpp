#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Converts raw start/end logit dumps into ranked top-K answer predictions:
// joint probability composition over span pairs, validity masking, optional
// start/end weighting, and no-answer handling. Everything here is pure and
// per-example; callers may map over LogitRecords from any number of threads.

namespace goldrank::spanex {

/// Character window [begin, end) into the example context, counted in
/// Unicode scalar values.
struct CharSpan {
    std::int32_t begin = 0;
    std::int32_t end = 0;

    bool operator==(const CharSpan&) const = default;
};

/// One model window over an example. Positions without a character mapping
/// (question tokens, specials) carry a disengaged offset entry and never form
/// answer spans. null_position, when present, is the position whose start+end
/// pair encodes the no-answer span.
struct Window {
    std::vector<double> start_logits;
    std::vector<double> end_logits;
    std::vector<std::optional<CharSpan>> token_char_offsets;
    std::optional<std::size_t> null_position;
};

struct LogitRecord {
    std::string example_id;
    std::vector<Window> windows;
};

/// A scored span. A disengaged char_span denotes the no-answer candidate.
/// text is resolved against the context by top_k_predictions; it stays empty
/// straight out of joint_span_scores, which never sees the context.
struct SpanCandidate {
    std::size_t start_token = 0;
    std::size_t end_token = 0;
    double probability = 0.0;
    std::string text;
    std::optional<CharSpan> char_span;
};

struct Prediction {
    std::string text;
    double probability = 0.0;
    std::optional<CharSpan> char_span;

    bool operator==(const Prediction&) const = default;
};

/// Ranked top-K list for one example, descending probability, rank 0 first.
struct PredictionSet {
    std::string example_id;
    std::vector<Prediction> predictions;
    int k = 0;

    bool operator==(const PredictionSet&) const = default;
};

struct SpanWeights {
    double start = 1.0;
    double end = 1.0;
};

/// Scores every valid span of one window plus the no-answer span.
///
/// score(j,k) = exp(ws*s_j + we*e_k) / sum_{q,r} exp(ws*s_q + we*e_r)
///
/// The denominator runs over the full position grid including invalid pairs;
/// invalid entries (ends before starts, spans longer than max_answer_tokens,
/// positions without character offsets) are excluded from the output but
/// their mass stays in the denominator, so valid-span scores need not sum
/// to 1. Computed with max-logit subtraction. Candidates come back in
/// (start_token, end_token) order.
///
/// Throws std::invalid_argument on empty windows, mismatched vector lengths,
/// or non-finite logits.
std::vector<SpanCandidate> joint_span_scores(const Window& w,
                                             int max_answer_tokens,
                                             SpanWeights weights = {});

/// Pools span candidates across windows, resolves texts against the context,
/// merges duplicate character spans keeping the highest probability, and
/// returns at most k predictions in descending probability order (ties break
/// lexicographically by (start_token, end_token, window)). If the no-answer
/// score minus the best span score, both in summed-logit space, exceeds
/// null_threshold, the empty answer is promoted to rank 0. Across windows
/// the no-answer logit sum is the minimum over windows.
PredictionSet top_k_predictions(const LogitRecord& rec,
                                std::string_view context, int k,
                                int max_answer_tokens, SpanWeights weights = {},
                                double null_threshold = 0.0);

/// Reads the logit-dump JSONL format, one record per line:
///   {"id", "windows":[{"start_logits":[...], "end_logits":[...],
///    "offsets":[[s,e]|null,...], "null_position":0}]}
/// Errors name the offending line.
std::vector<LogitRecord> load_logit_records(const std::string& path);

/// Reads the top-K prediction JSONL interchange format:
///   {"id", "predictions":[{"text", "probability", "start_char", "end_char"}...]}
/// Enforces PredictionSet invariants; out-of-order probabilities and
/// duplicate spans are rejected with the line number.
std::vector<PredictionSet> load_prediction_file(const std::string& path);

void write_prediction_file(const std::vector<PredictionSet>& sets,
                           std::ostream& out);

}  // namespace goldrank::spanex
