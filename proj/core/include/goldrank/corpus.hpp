#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

// Dataset ingestion and validation. Establishes the id space every other
// module keys on. Datasets are immutable after load and safe for concurrent
// reads.

namespace goldrank::corpus {

/// Ground-truth answer span. answer_start counts Unicode scalar values into
/// the context, 0-based.
struct GoldenAnswer {
    std::string text;
    std::int64_t answer_start = 0;

    bool operator==(const GoldenAnswer&) const = default;
};

struct Example {
    std::string id;
    std::string title;
    std::string question;
    std::string context;
    std::vector<GoldenAnswer> golden_answers;
    bool is_impossible = false;

    bool operator==(const Example&) const = default;

    std::vector<std::string> golden_texts() const;
};

struct Dataset {
    std::vector<Example> examples;
    std::string source_path;

    bool operator==(const Dataset&) const = default;
};

enum class IssueKind {
    EmptyId,
    AnswerabilityContradiction,
    OffsetOutOfBounds,
    AnswerTextMismatch,
};

const char* issue_name(IssueKind kind);

struct Issue {
    IssueKind kind;
    std::string message;
};

struct DiscardedExample {
    Example example;
    std::vector<Issue> issues;
};

/// A loaded dataset together with the examples that failed validation.
/// Failing examples are excluded from `dataset` but never silently dropped:
/// they surface in the `discarded` section of reports.
struct LoadResult {
    Dataset dataset;
    std::vector<DiscardedExample> discarded;
};

/// Loads either the nested article/paragraph JSON layout or the flat JSONL
/// variant (one example object per line). Throws std::runtime_error on
/// unreadable files, malformed structure, or duplicate ids (the error names
/// both entries).
LoadResult load_dataset(const std::string& path);

/// Total function: empty result iff every Example invariant holds.
std::vector<Issue> validate_example(const Example& e);

/// Partition into (answerable, unanswerable), order preserved.
std::pair<Dataset, Dataset> split_answerability(const Dataset& d);

/// Serializes to the flat JSONL variant accepted by load_dataset.
void write_dataset_jsonl(const Dataset& d, std::ostream& out);

/// Index of example ids to positions in `examples`.
std::unordered_map<std::string, std::size_t> index_by_id(const Dataset& d);

}  // namespace goldrank::corpus
