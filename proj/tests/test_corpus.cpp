#include <doctest.h>

#include <sstream>

#include "goldrank/corpus.hpp"
#include "support/temp_files.hpp"

using namespace goldrank;

TEST_CASE("load_dataset flattens the nested article/paragraph layout") {
    const corpus::LoadResult loaded =
        corpus::load_dataset(testutil::fixture("squad_mini.json"));
    CHECK(loaded.dataset.examples.size() == 6);
    CHECK(loaded.discarded.empty());
    CHECK(loaded.dataset.examples[0].id == "q-amazon-1");
    CHECK(loaded.dataset.examples[0].title == "Amazon");
    CHECK(loaded.dataset.examples[0].golden_answers.size() == 2);
    CHECK(loaded.dataset.examples[1].is_impossible);
    CHECK(loaded.dataset.examples[1].golden_answers.empty());

    const auto [answerable, unanswerable] =
        corpus::split_answerability(loaded.dataset);
    CHECK(answerable.examples.size() == 4);
    CHECK(unanswerable.examples.size() == 2);
}

TEST_CASE("load_dataset reads the flat JSONL variant") {
    const corpus::LoadResult loaded =
        corpus::load_dataset(testutil::fixture("trio_dataset.jsonl"));
    CHECK(loaded.dataset.examples.size() == 3);
    CHECK(loaded.discarded.empty());
    CHECK(loaded.dataset.examples[2].golden_answers.size() == 4);
}

TEST_CASE("an empty examples array is a valid dataset") {
    const auto path = testutil::write_temp("empty_data.json", R"({"data": []})");
    const corpus::LoadResult loaded = corpus::load_dataset(path);
    CHECK(loaded.dataset.examples.empty());
    CHECK(loaded.discarded.empty());
}

TEST_CASE("examples failing validation are collected, not dropped silently") {
    const corpus::LoadResult loaded =
        corpus::load_dataset(testutil::fixture("mixed_invalid.jsonl"));
    CHECK(loaded.dataset.examples.size() == 1);
    REQUIRE(loaded.discarded.size() == 2);
    CHECK(loaded.discarded[0].example.id == "bad-1");
    REQUIRE(loaded.discarded[0].issues.size() == 1);
    CHECK(loaded.discarded[0].issues[0].kind == corpus::IssueKind::AnswerTextMismatch);
    CHECK(loaded.discarded[1].example.id == "bad-2");
    CHECK(loaded.discarded[1].issues[0].kind ==
          corpus::IssueKind::AnswerabilityContradiction);
}

TEST_CASE("duplicate ids name both entries") {
    CHECK_THROWS_WITH_AS(
        corpus::load_dataset(testutil::fixture("duplicate_ids.jsonl")),
        doctest::Contains("entries 0 and 2"), std::runtime_error);
}

TEST_CASE("unreadable and malformed files raise errors") {
    CHECK_THROWS_AS(corpus::load_dataset("/nonexistent/nowhere.json"),
                    std::runtime_error);
    const auto bad = testutil::write_temp("bad_structure.json", R"({"data": 42})");
    CHECK_THROWS_AS(corpus::load_dataset(bad), std::runtime_error);
    const auto bad_line =
        testutil::write_temp("bad_line.jsonl", "{\"id\": \"x\"\nnot json\n");
    CHECK_THROWS_WITH_AS(corpus::load_dataset(bad_line), doctest::Contains(":1:"),
                         std::runtime_error);
}

TEST_CASE("validate_example names each violated invariant") {
    corpus::Example ok;
    ok.id = "x";
    ok.context = "Some context with an answer inside.";
    ok.golden_answers = {{"answer", 21}};
    CHECK(corpus::validate_example(ok).empty());

    corpus::Example contradiction = ok;
    contradiction.is_impossible = true;
    const auto issues = corpus::validate_example(contradiction);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].kind == corpus::IssueKind::AnswerabilityContradiction);
    CHECK(std::string(corpus::issue_name(issues[0].kind)) ==
          "answerability-contradiction");

    corpus::Example out_of_bounds = ok;
    out_of_bounds.golden_answers = {{"answer", 999}};
    const auto oob = corpus::validate_example(out_of_bounds);
    REQUIRE(oob.size() == 1);
    CHECK(oob[0].kind == corpus::IssueKind::OffsetOutOfBounds);
    CHECK(std::string(corpus::issue_name(oob[0].kind)) == "offset-out-of-bounds");

    corpus::Example empty_id = ok;
    empty_id.id.clear();
    CHECK(corpus::validate_example(empty_id).size() == 1);
}

TEST_CASE("offsets count unicode characters, not bytes") {
    corpus::Example e;
    e.id = "u";
    e.context = "café · twice as much";  // é and · are multi-byte
    e.golden_answers = {{"twice as much", 7}};
    CHECK(corpus::validate_example(e).empty());
    e.golden_answers = {{"twice as much", 8}};  // byte offset, wrong
    CHECK(corpus::validate_example(e).size() == 1);
}

TEST_CASE("datasets round-trip through the JSONL serialization") {
    const corpus::LoadResult first =
        corpus::load_dataset(testutil::fixture("squad_mini.json"));
    std::ostringstream buffer;
    corpus::write_dataset_jsonl(first.dataset, buffer);
    const auto path = testutil::write_temp("roundtrip.jsonl", buffer.str());
    const corpus::LoadResult second = corpus::load_dataset(path);
    CHECK(second.dataset.examples == first.dataset.examples);
    CHECK(second.discarded.empty());

    std::ostringstream again;
    corpus::write_dataset_jsonl(second.dataset, again);
    CHECK(again.str() == buffer.str());
}

TEST_CASE("split_answerability partitions and preserves order") {
    const corpus::LoadResult loaded =
        corpus::load_dataset(testutil::fixture("squad_mini.json"));
    const auto [answerable, unanswerable] =
        corpus::split_answerability(loaded.dataset);
    CHECK(answerable.examples.size() + unanswerable.examples.size() ==
          loaded.dataset.examples.size());
    for (const auto& e : answerable.examples) CHECK_FALSE(e.is_impossible);
    for (const auto& e : unanswerable.examples) CHECK(e.is_impossible);

    corpus::Dataset empty;
    const auto [a2, u2] = corpus::split_answerability(empty);
    CHECK(a2.examples.empty());
    CHECK(u2.examples.empty());

    corpus::Dataset all_impossible;
    corpus::Example imp;
    imp.id = "i";
    imp.is_impossible = true;
    all_impossible.examples = {imp, imp};
    const auto [a3, u3] = corpus::split_answerability(all_impossible);
    CHECK(a3.examples.empty());
    CHECK(u3.examples.size() == 2);
}
