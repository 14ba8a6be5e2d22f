#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "goldrank/spanex.hpp"
#include "support/oracles.hpp"
#include "support/temp_files.hpp"

using namespace goldrank;
using spanex::CharSpan;
using spanex::Window;

namespace {

Window flat_window_with_null() {
    // position 0 encodes no-answer, positions 1..2 map to context chars
    Window w;
    w.start_logits = {0.0, 0.0, 0.0};
    w.end_logits = {0.0, 0.0, 0.0};
    w.token_char_offsets = {std::nullopt, CharSpan{0, 5}, CharSpan{6, 8}};
    w.null_position = 0;
    return w;
}

}  // namespace

TEST_CASE("uniform logits spread mass over the full pair grid") {
    const auto candidates = spanex::joint_span_scores(flat_window_with_null(), 1);
    REQUIRE(candidates.size() == 4);  // (1,1) (1,2) (2,2) and the null span
    for (const auto& c : candidates)
        CHECK(c.probability == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK_FALSE(candidates.back().char_span.has_value());
}

TEST_CASE("scores follow the summed-logit softmax over all pairs") {
    Window w;
    w.start_logits = {std::log(2.0), 0.0};
    w.end_logits = {0.0, 0.0};
    w.token_char_offsets = {CharSpan{0, 3}, CharSpan{4, 8}};
    const auto candidates = spanex::joint_span_scores(w, 1);
    REQUIRE(candidates.size() == 3);  // (1,0) is excluded, its mass retained
    CHECK(candidates[0].probability == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
    CHECK(candidates[1].probability == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
    CHECK(candidates[2].probability == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("joint scores equal the product of independent softmaxes") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> logit(-6.0, 6.0);
    std::uniform_int_distribution<std::size_t> length(2, 8);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t n = length(rng);
        Window w;
        for (std::size_t i = 0; i < n; ++i) {
            w.start_logits.push_back(logit(rng));
            w.end_logits.push_back(logit(rng));
            w.token_char_offsets.push_back(
                CharSpan{static_cast<std::int32_t>(2 * i),
                         static_cast<std::int32_t>(2 * i + 1)});
        }
        const auto grid = oracles::outer_softmax(w.start_logits, w.end_logits);
        double grid_total = 0.0;
        for (const auto& row : grid)
            for (double v : row) grid_total += v;
        CHECK(grid_total == doctest::Approx(1.0).epsilon(1e-9));

        for (int max_len : {0, 1, 5, 30}) {
            for (const auto& c : spanex::joint_span_scores(w, max_len)) {
                CHECK(c.end_token >= c.start_token);
                CHECK(c.end_token - c.start_token <=
                      static_cast<std::size_t>(max_len));
                const double expected = grid[c.start_token][c.end_token];
                CHECK(std::abs(c.probability - expected) <= 1e-12 * expected);
                CHECK(c.probability > 0.0);
                CHECK(c.probability <= 1.0);
            }
        }
    }
}

TEST_CASE("joint_span_scores rejects malformed windows") {
    Window empty;
    CHECK_THROWS_AS(spanex::joint_span_scores(empty, 5), std::invalid_argument);

    Window bad = flat_window_with_null();
    bad.end_logits.pop_back();
    CHECK_THROWS_AS(spanex::joint_span_scores(bad, 5), std::invalid_argument);

    Window nan_window = flat_window_with_null();
    nan_window.start_logits[1] = std::nan("");
    CHECK_THROWS_AS(spanex::joint_span_scores(nan_window, 5),
                    std::invalid_argument);
}

TEST_CASE("a confident no-answer is promoted to rank 0") {
    // context: "twice as much or more"
    spanex::LogitRecord rec;
    rec.example_id = "c0";
    Window w;
    w.start_logits = {5.0, 2.0, 0.0, 0.0};
    w.end_logits = {5.0, 0.0, 0.0, 2.0};
    w.token_char_offsets = {std::nullopt, CharSpan{0, 5}, CharSpan{6, 8},
                            CharSpan{9, 13}};
    w.null_position = 0;
    rec.windows.push_back(w);

    const auto set =
        spanex::top_k_predictions(rec, "twice as much or more", 10, 30);
    REQUIRE(set.predictions.size() >= 2);
    CHECK(set.predictions[0].text == "");
    CHECK(set.predictions[1].text == "twice as much");
    for (std::size_t i = 1; i < set.predictions.size(); ++i)
        CHECK(set.predictions[i].probability <=
              set.predictions[i - 1].probability);
}

TEST_CASE("k = 1 returns exactly the argmax candidate") {
    spanex::LogitRecord rec;
    rec.example_id = "x";
    Window w;
    w.start_logits = {0.0, 3.0};
    w.end_logits = {0.0, 3.0};
    w.token_char_offsets = {CharSpan{0, 4}, CharSpan{5, 9}};
    rec.windows.push_back(w);
    const auto set = spanex::top_k_predictions(rec, "abcd efgh", 1, 30);
    REQUIRE(set.predictions.size() == 1);
    CHECK(set.predictions[0].text == "efgh");
}

TEST_CASE("the same char span seen in two windows keeps the best probability") {
    spanex::LogitRecord rec;
    rec.example_id = "m";
    Window low;
    low.start_logits = {0.0, 1.0};
    low.end_logits = {0.0, 1.0};
    low.token_char_offsets = {CharSpan{0, 4}, CharSpan{5, 9}};
    Window high;
    high.start_logits = {0.0, 4.0};
    high.end_logits = {0.0, 4.0};
    high.token_char_offsets = {CharSpan{0, 4}, CharSpan{5, 9}};
    rec.windows = {low, high};

    const double p_low = spanex::joint_span_scores(low, 0)[1].probability;
    const double p_high = spanex::joint_span_scores(high, 0)[1].probability;
    REQUIRE(p_high > p_low);

    const auto set = spanex::top_k_predictions(rec, "abcd efgh", 10, 0);
    int seen = 0;
    for (const auto& p : set.predictions)
        if (p.text == "efgh") {
            ++seen;
            CHECK(p.probability == doctest::Approx(p_high).epsilon(1e-15));
        }
    CHECK(seen == 1);
}

TEST_CASE("span resolution counts characters, not bytes") {
    spanex::LogitRecord rec;
    rec.example_id = "u";
    Window w;
    w.start_logits = {0.0, 2.0};
    w.end_logits = {0.0, 2.0};
    w.token_char_offsets = {CharSpan{0, 4}, CharSpan{7, 12}};
    rec.windows.push_back(w);
    const auto set = spanex::top_k_predictions(rec, "café · noir!", 1, 30);
    REQUIRE(set.predictions.size() == 1);
    CHECK(set.predictions[0].text == "noir!");

    Window oob = w;
    oob.token_char_offsets[1] = CharSpan{7, 99};
    rec.windows = {oob};
    CHECK_THROWS_AS(spanex::top_k_predictions(rec, "café · noir!", 1, 30),
                    std::runtime_error);
}

TEST_CASE("identical inputs yield byte-identical prediction files") {
    spanex::LogitRecord rec;
    rec.example_id = "d";
    Window w = flat_window_with_null();
    w.start_logits = {0.3, 1.7, -2.2};
    w.end_logits = {0.1, 0.4, 2.6};
    rec.windows.push_back(w);
    const auto one = spanex::top_k_predictions(rec, "abcde fg", 10, 30);
    const auto two = spanex::top_k_predictions(rec, "abcde fg", 10, 30);
    CHECK(one == two);
    std::ostringstream b1, b2;
    spanex::write_prediction_file({one}, b1);
    spanex::write_prediction_file({two}, b2);
    CHECK(b1.str() == b2.str());
}

TEST_CASE("the top-k list is a prefix of the top-(k+1) list") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> logit(-4.0, 4.0);
    for (int iter = 0; iter < 30; ++iter) {
        spanex::LogitRecord rec;
        rec.example_id = "p";
        Window w;
        const std::string context = "aa bb cc dd ee ff gg hh";
        for (int i = 0; i < 8; ++i) {
            w.start_logits.push_back(logit(rng));
            w.end_logits.push_back(logit(rng));
            w.token_char_offsets.push_back(CharSpan{3 * i, 3 * i + 2});
        }
        w.null_position.reset();
        rec.windows.push_back(w);
        for (int k = 1; k < 6; ++k) {
            const auto smaller = spanex::top_k_predictions(rec, context, k, 4);
            const auto larger = spanex::top_k_predictions(rec, context, k + 1, 4);
            REQUIRE(smaller.predictions.size() <= larger.predictions.size());
            for (std::size_t i = 0; i < smaller.predictions.size(); ++i)
                CHECK(smaller.predictions[i] == larger.predictions[i]);
        }
    }
}

TEST_CASE("prediction files load with invariants enforced") {
    const auto sets =
        spanex::load_prediction_file(testutil::fixture("trio_predictions.jsonl"));
    REQUIRE(sets.size() == 3);
    CHECK(sets[0].example_id == "8b");
    CHECK(sets[1].example_id == "e1");
    CHECK(sets[2].example_id == "c0");
    for (const auto& s : sets) CHECK(s.predictions.size() == 10);

    CHECK(spanex::load_prediction_file(testutil::fixture("empty.jsonl")).empty());

    CHECK_THROWS_WITH_AS(
        spanex::load_prediction_file(
            testutil::fixture("ascending_predictions.jsonl")),
        doctest::Contains(":2:"), std::runtime_error);
}

TEST_CASE("duplicate concrete spans in a prediction file are rejected") {
    const std::string line =
        R"({"id":"dup","predictions":[)"
        R"({"text":"ab","probability":0.6,"start_char":0,"end_char":2},)"
        R"({"text":"ab","probability":0.4,"start_char":0,"end_char":2}]})";
    const auto path = testutil::write_temp("dup_span.jsonl", line + "\n");
    CHECK_THROWS_WITH_AS(spanex::load_prediction_file(path),
                         doctest::Contains("duplicate"), std::runtime_error);
}

TEST_CASE("logit dumps round-trip through the JSONL format") {
    const std::string line =
        R"({"id":"a","windows":[{"start_logits":[0.5,1.0],"end_logits":[0.0,2.0],)"
        R"("offsets":[null,[0,4]],"null_position":0}]})";
    const auto path = testutil::write_temp("logits.jsonl", line + "\n");
    const auto records = spanex::load_logit_records(path);
    REQUIRE(records.size() == 1);
    CHECK(records[0].example_id == "a");
    REQUIRE(records[0].windows.size() == 1);
    CHECK(records[0].windows[0].null_position == 0);
    CHECK_FALSE(records[0].windows[0].token_char_offsets[0].has_value());
    CHECK(records[0].windows[0].token_char_offsets[1] == CharSpan{0, 4});

    const std::string bad =
        R"({"id":"b","windows":[{"start_logits":[0.5],"end_logits":[0.0,2.0],)"
        R"("offsets":[null,[0,4]]}]})";
    const auto bad_path = testutil::write_temp("bad_logits.jsonl", bad + "\n");
    CHECK_THROWS_WITH_AS(spanex::load_logit_records(bad_path),
                         doctest::Contains(":1:"), std::runtime_error);
}
