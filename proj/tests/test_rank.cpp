#include <doctest.h>

#include <random>
#include <sstream>

#include "goldrank/corpus.hpp"
#include "goldrank/rank.hpp"
#include "goldrank/textnorm.hpp"
#include "support/oracles.hpp"
#include "support/temp_files.hpp"

using namespace goldrank;
using rank::MedianConvention;

namespace {

struct Trio {
    corpus::LoadResult loaded;
    std::vector<spanex::PredictionSet> sets;
};

Trio load_trio() {
    return {corpus::load_dataset(testutil::fixture("trio_dataset.jsonl")),
            spanex::load_prediction_file(testutil::fixture("trio_predictions.jsonl"))};
}

const corpus::Example& example_of(const corpus::Dataset& d, const std::string& id) {
    for (const auto& e : d.examples)
        if (e.id == id) return e;
    throw std::runtime_error("missing " + id);
}

}  // namespace

TEST_CASE("golden_rank finds the lowest matching rank") {
    const Trio trio = load_trio();
    const auto& dataset = trio.loaded.dataset;

    const auto c0 = rank::golden_rank(trio.sets[2], example_of(dataset, "c0"), 10);
    CHECK(c0.gr == 1);
    CHECK_FALSE(c0.capped);
    CHECK(c0.matched_text == "twice as much");

    const auto e1 = rank::golden_rank(trio.sets[1], example_of(dataset, "e1"), 10);
    CHECK(e1.gr == 0);
    CHECK(e1.matched_text == "vertebrates");

    const auto b8 = rank::golden_rank(trio.sets[0], example_of(dataset, "8b"), 10);
    CHECK(b8.gr == 0);  // empty prediction matches the unanswerable example

    // no matching text within k predictions
    spanex::PredictionSet hopeless;
    hopeless.example_id = "c0";
    for (int i = 0; i < 10; ++i)
        hopeless.predictions.push_back(
            {"wrong " + std::to_string(i), 1.0 / (i + 1), std::nullopt});
    hopeless.k = 10;
    const auto capped =
        rank::golden_rank(hopeless, example_of(dataset, "c0"), 10);
    CHECK(capped.gr == 10);
    CHECK(capped.capped);
    CHECK_FALSE(capped.matched_text.has_value());

    spanex::PredictionSet wrong_id = trio.sets[0];
    CHECK_THROWS_AS(rank::golden_rank(wrong_id, example_of(dataset, "c0"), 10),
                    std::invalid_argument);
}

TEST_CASE("interpolated_median follows the printed shift, flag flips the sign") {
    CHECK(rank::interpolated_median(std::vector<int>{2, 2, 2}) == 2.0);
    CHECK(rank::interpolated_median(std::vector<int>{2, 2, 3}) == 1.75);
    CHECK(rank::interpolated_median(std::vector<int>{1, 2, 2, 3, 10}) == 1.75);
    CHECK(rank::interpolated_median(std::vector<int>{2, 2, 3},
                                    MedianConvention::Standard) == 2.25);
    // even count straddling two distinct values keeps the plain median
    CHECK(rank::interpolated_median(std::vector<int>{1, 2, 3, 10}) == 2.5);
    CHECK(rank::interpolated_median(std::vector<int>{7}) == 7.0);
    CHECK_THROWS_AS(rank::interpolated_median(std::vector<int>{}),
                    std::invalid_argument);
}

TEST_CASE("interpolated median stays near the plain median and matches the oracle") {
    std::mt19937 rng(555);
    std::uniform_int_distribution<int> value(0, 10);
    std::uniform_int_distribution<int> size(1, 200);
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<int> values(size(rng));
        for (int& v : values) v = value(rng);

        for (const bool paper : {true, false}) {
            const auto convention =
                paper ? MedianConvention::Paper : MedianConvention::Standard;
            const double ours = rank::interpolated_median(values, convention);
            const double reference =
                oracles::direct_interpolated_median(values, paper);
            CHECK(ours == doctest::Approx(reference).epsilon(1e-12));

            std::vector<int> sorted = values;
            std::sort(sorted.begin(), sorted.end());
            const double plain =
                sorted.size() % 2 == 1
                    ? sorted[sorted.size() / 2]
                    : (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]) /
                          2.0;
            CHECK(std::abs(ours - plain) <= 0.5 + 1e-12);
        }
    }
}

namespace {

std::vector<rank::GoldenRankRecord> records_of(const std::vector<int>& grs) {
    std::vector<rank::GoldenRankRecord> records;
    for (std::size_t i = 0; i < grs.size(); ++i)
        records.push_back({"id" + std::to_string(i), grs[i], false, std::nullopt});
    return records;
}

}  // namespace

TEST_CASE("grim is the interpolated median of secondary ranks only") {
    CHECK(rank::grim(records_of({0, 0, 2, 2, 3})) == 1.75);
    CHECK_FALSE(rank::grim(records_of({0, 0, 0})).has_value());
    CHECK(rank::grim(records_of({0, 5})) == 5.0);
}

TEST_CASE("rank aggregates pin the reciprocal-rank anchors") {
    const auto farr_only = rank::rank_aggregates(records_of({0, 3}), 1.0);
    CHECK(farr_only.farr == 1.0 / 3.0);
    CHECK(farr_only.dgrm == 1.0 / 3.0);

    const auto mrr_case = rank::rank_aggregates(records_of({0, 1, 3}), 1.0);
    CHECK(mrr_case.mrr ==
          doctest::Approx((1.0 + 0.5 + 0.25) / 3.0).epsilon(1e-12));

    const auto discounted = rank::rank_aggregates(records_of({0, 2}), 2.0);
    CHECK(discounted.dgrm == 0.25);

    const auto no_secondary = rank::rank_aggregates(records_of({0, 0}), 1.0);
    CHECK_FALSE(no_secondary.dgrm.has_value());
    CHECK_FALSE(no_secondary.farr.has_value());
    CHECK(no_secondary.mrr == 1.0);
    CHECK(no_secondary.grm == 0.0);
}

TEST_CASE("dgrm at gamma 1 equals farr and mrr stays in (0,1]") {
    std::mt19937 rng(808);
    std::uniform_int_distribution<int> value(0, 10);
    std::uniform_int_distribution<int> size(1, 60);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<int> grs(size(rng));
        bool all_zero = true;
        for (int& v : grs) {
            v = value(rng);
            all_zero = all_zero && v == 0;
        }
        const auto agg = rank::rank_aggregates(records_of(grs), 1.0);
        if (agg.dgrm) CHECK(*agg.dgrm == *agg.farr);
        CHECK(agg.mrr > 0.0);
        CHECK(agg.mrr <= 1.0);
        CHECK((agg.mrr == 1.0) == all_zero);
    }
}

TEST_CASE("aggregate_report reproduces the three-example fixture") {
    const Trio trio = load_trio();
    const auto records = rank::score_run(trio.sets, trio.loaded.dataset, 10);
    const auto report = rank::aggregate_report("trio", records, trio.sets,
                                               trio.loaded.dataset, 10, 1.0);
    CHECK(report.em == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(report.grim == 1.0);
    CHECK(report.f1 == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(report.n_examples == 3);
    CHECK(report.n_secondary == 1);
    REQUIRE(report.rank_histogram.size() == 11);
    CHECK(report.rank_histogram[0] == 2);
    CHECK(report.rank_histogram[1] == 1);
    CHECK(report.mrr == doctest::Approx((1.0 + 0.5 + 1.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("a run with every primary prediction correct has no GRIM") {
    corpus::Dataset dataset;
    std::vector<spanex::PredictionSet> sets;
    for (int i = 0; i < 4; ++i) {
        corpus::Example e;
        e.id = "p" + std::to_string(i);
        e.context = "the answer text here";
        e.golden_answers = {{"answer text", 4}};
        dataset.examples.push_back(e);
        spanex::PredictionSet s;
        s.example_id = e.id;
        s.predictions = {{"answer text", 0.9, std::nullopt}};
        s.k = 1;
        sets.push_back(s);
    }
    const auto records = rank::score_run(sets, dataset, 10);
    const auto report =
        rank::aggregate_report("perfect", records, sets, dataset, 10, 1.0);
    CHECK(report.em == 100.0);
    CHECK_FALSE(report.grim.has_value());

    CHECK_THROWS_AS(
        rank::aggregate_report("empty", {}, sets, dataset, 10, 1.0),
        std::invalid_argument);
}

TEST_CASE("EM computed from golden ranks equals EM from primary predictions") {
    std::mt19937 rng(31337);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> pick(0, 4);
    const std::vector<std::string> vocabulary{"alpha", "beta", "gamma", "delta",
                                              "epsilon"};
    for (int run = 0; run < 100; ++run) {
        corpus::Dataset dataset;
        std::vector<spanex::PredictionSet> sets;
        const int n = 20;
        for (int i = 0; i < n; ++i) {
            corpus::Example e;
            e.id = "r" + std::to_string(i);
            const std::string word = vocabulary[pick(rng)];
            e.context = "filler " + word + " filler";
            if (coin(rng)) {
                e.golden_answers = {{word, 7}};
            } else {
                e.is_impossible = true;
            }
            dataset.examples.push_back(e);

            spanex::PredictionSet s;
            s.example_id = e.id;
            double p = 0.9;
            for (int r = 0; r < 3; ++r) {
                const std::string guess = coin(rng) ? vocabulary[pick(rng)]
                                                    : std::string{};
                s.predictions.push_back({guess, p, std::nullopt});
                p /= 2;
            }
            s.k = 3;
            sets.push_back(s);
        }
        const auto records = rank::score_run(sets, dataset, 10);
        const auto report =
            rank::aggregate_report("syn", records, sets, dataset, 10, 1.0);

        int direct = 0;
        for (int i = 0; i < n; ++i)
            if (textnorm::exact_match(sets[i].predictions[0].text,
                                      dataset.examples[i].golden_texts()))
                ++direct;
        CHECK(report.em == 100.0 * direct / n);

        std::int64_t total = 0;
        for (const auto c : report.rank_histogram) total += c;
        CHECK(total == report.n_examples);
    }
}

TEST_CASE("records agree below the smaller of two caps") {
    const Trio trio = load_trio();
    for (const auto& set : trio.sets) {
        const auto& e = example_of(trio.loaded.dataset, set.example_id);
        const auto small = rank::golden_rank(set, e, 5);
        const auto large = rank::golden_rank(set, e, 8);
        if (small.gr < 5) {
            CHECK(small.gr == large.gr);
            CHECK(small.matched_text == large.matched_text);
        } else {
            CHECK(small.gr == 5);
            CHECK(large.gr >= 5);
        }
    }
}

TEST_CASE("golden-rank records serialize to CSV and JSONL") {
    std::vector<rank::GoldenRankRecord> records{
        {"a,1", 0, false, std::string("it, matched")},
        {"b", 10, true, std::nullopt}};
    std::ostringstream csv;
    rank::write_gr_csv(records, csv);
    CHECK(csv.str() ==
          "id,gr,capped,matched_text\n\"a,1\",0,false,\"it, matched\"\nb,10,true,\n");
    std::ostringstream jsonl;
    rank::write_gr_jsonl(records, jsonl);
    CHECK(jsonl.str().find("\"matched_text\":null") != std::string::npos);

    const auto trio = load_trio();
    const auto report = rank::aggregate_report(
        "trio", rank::score_run(trio.sets, trio.loaded.dataset, 10), trio.sets,
        trio.loaded.dataset, 10, 1.0);
    const std::string table = rank::to_table({report});
    CHECK(table.find("66.67") != std::string::npos);
    CHECK(table.find("cap-biased") != std::string::npos);
    const std::string json_text = rank::to_json(report);
    CHECK(json_text.find("\"em\"") != std::string::npos);
}
