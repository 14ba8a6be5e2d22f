#include "goldrank/ensemble.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "goldrank/textnorm.hpp"

namespace goldrank::ensemble {

std::vector<std::string> select_members(
    const std::vector<rank::AggregateReport>& reports, const EnsembleSpec& spec,
    std::optional<std::uint64_t> seed) {
    if (reports.empty()) throw std::invalid_argument("no reports to select from");
    if (spec.size < 1) throw std::invalid_argument("ensemble size must be >= 1");
    if (static_cast<std::size_t>(spec.size) > reports.size())
        throw std::invalid_argument(
            "ensemble size " + std::to_string(spec.size) + " exceeds the " +
            std::to_string(reports.size()) + " available experiments");
    if (spec.criterion == Criterion::Grim)
        for (const auto& r : reports)
            if (!r.grim)
                throw std::invalid_argument(
                    "experiment \"" + r.experiment +
                    "\" has no GRIM (no secondary predictions); cannot select by GRIM");

    std::vector<std::size_t> order(reports.size());
    std::iota(order.begin(), order.end(), 0);
    if (seed) {
        std::mt19937_64 rng(*seed);
        std::shuffle(order.begin(), order.end(), rng);
    }

    const auto key = [&](std::size_t i) -> double {
        const auto& r = reports[i];
        switch (spec.criterion) {
            case Criterion::Em:
                return -r.em;
            case Criterion::F1:
                return -r.f1;
            case Criterion::Grim:
                return spec.grim_lower_is_better ? *r.grim : -*r.grim;
        }
        return 0.0;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (key(a) != key(b)) return key(a) < key(b);
        if (seed) return false;  // tied order comes from the shuffle
        if (reports[a].f1 != reports[b].f1) return reports[a].f1 > reports[b].f1;
        return reports[a].experiment < reports[b].experiment;
    });

    std::vector<std::string> members;
    members.reserve(static_cast<std::size_t>(spec.size));
    for (int i = 0; i < spec.size; ++i)
        members.push_back(reports[order[static_cast<std::size_t>(i)]].experiment);
    return members;
}

std::vector<EnsemblePrediction> majority_vote(
    const std::vector<std::pair<std::string, std::vector<spanex::PredictionSet>>>&
        runs,
    const std::vector<std::string>& members,
    std::optional<std::uint64_t> seed) {
    if (members.empty()) throw std::invalid_argument("no ensemble members");

    std::unordered_map<std::string,
                       std::unordered_map<std::string, const spanex::PredictionSet*>>
        run_index;
    for (const auto& [name, sets] : runs) {
        auto& by_id = run_index[name];
        for (const auto& s : sets) by_id.emplace(s.example_id, &s);
    }
    for (const auto& m : members)
        if (run_index.find(m) == run_index.end())
            throw std::invalid_argument("member \"" + m +
                                        "\" is not among the supplied runs");

    // The id universe is every id any member predicts; each member must
    // cover all of it.
    std::vector<std::string> ids;
    {
        std::unordered_map<std::string, bool> seen;
        for (const auto& m : members)
            for (const auto& [id, set] : run_index.at(m))
                if (seen.emplace(id, true).second) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
    }

    std::optional<std::mt19937_64> rng;
    if (seed) rng.emplace(*seed);

    std::vector<EnsemblePrediction> out;
    out.reserve(ids.size());
    for (const std::string& id : ids) {
        struct Ballot {
            std::string surface;
            double prob;
            std::string member;
        };
        // Normalized answer -> supporting ballots. Ordered map keeps the
        // lexicographic tie-break deterministic.
        std::map<std::string, std::vector<Ballot>> urn;
        for (const auto& m : members) {
            const auto& by_id = run_index.at(m);
            auto it = by_id.find(id);
            if (it == by_id.end() || it->second->predictions.empty())
                throw std::runtime_error("member \"" + m +
                                         "\" has no prediction for example \"" +
                                         id + "\"");
            const spanex::Prediction& primary = it->second->predictions.front();
            urn[textnorm::normalize(primary.text).value].push_back(
                {primary.text, primary.probability, m});
        }

        std::vector<const std::map<std::string, std::vector<Ballot>>::value_type*>
            slates;
        for (const auto& entry : urn) slates.push_back(&entry);
        if (rng) std::shuffle(slates.begin(), slates.end(), *rng);
        const auto mean_prob = [](const std::vector<Ballot>& b) {
            double s = 0.0;
            for (const auto& x : b) s += x.prob;
            return s / b.size();
        };
        std::stable_sort(slates.begin(), slates.end(), [&](auto* a, auto* b) {
            if (a->second.size() != b->second.size())
                return a->second.size() > b->second.size();
            if (mean_prob(a->second) != mean_prob(b->second))
                return mean_prob(a->second) > mean_prob(b->second);
            if (rng) return false;
            return a->first < b->first;
        });

        const auto& winner = *slates.front();
        EnsemblePrediction pred;
        pred.example_id = id;
        pred.votes = static_cast<int>(winner.second.size());
        const Ballot* best = &winner.second.front();
        for (const Ballot& b : winner.second) {
            if (b.prob > best->prob ||
                (b.prob == best->prob && b.surface < best->surface))
                best = &b;
            pred.supporters.push_back(b.member);
        }
        pred.text = best->surface;
        out.push_back(std::move(pred));
    }
    return out;
}

std::pair<double, double> evaluate_ensemble(
    const std::vector<EnsemblePrediction>& preds,
    const corpus::Dataset& dataset) {
    if (dataset.examples.empty()) throw std::invalid_argument("empty dataset");
    std::unordered_map<std::string, const EnsemblePrediction*> by_id;
    for (const auto& p : preds) by_id.emplace(p.example_id, &p);
    double em_count = 0.0, f1_sum = 0.0;
    for (const corpus::Example& e : dataset.examples) {
        auto it = by_id.find(e.id);
        if (it == by_id.end())
            throw std::runtime_error("no ensemble prediction for example \"" +
                                     e.id + "\"");
        const std::vector<std::string> goldens = e.golden_texts();
        if (textnorm::exact_match(it->second->text, goldens)) em_count += 1.0;
        f1_sum += textnorm::token_f1(it->second->text, goldens);
    }
    const double n = static_cast<double>(dataset.examples.size());
    return {100.0 * em_count / n, 100.0 * f1_sum / n};
}

std::vector<spanex::PredictionSet> to_prediction_sets(
    const std::vector<EnsemblePrediction>& preds, int member_count) {
    if (member_count < 1) throw std::invalid_argument("member_count must be >= 1");
    std::vector<spanex::PredictionSet> sets;
    sets.reserve(preds.size());
    for (const auto& p : preds) {
        spanex::PredictionSet set;
        set.example_id = p.example_id;
        set.k = 1;
        set.predictions.push_back(
            {p.text, static_cast<double>(p.votes) / member_count, std::nullopt});
        sets.push_back(std::move(set));
    }
    return sets;
}

}  // namespace goldrank::ensemble
