#include "goldrank/textnorm.hpp"

#include <algorithm>
#include <map>

#include "goldrank/unicode.hpp"

namespace goldrank::textnorm {

namespace {

bool is_article(std::u32string_view token) {
    return token == U"a" || token == U"an" || token == U"the";
}

}  // namespace

NormalizedText normalize(std::string_view raw) {
    std::u32string chars = unicode::decode_utf8(raw);

    // lowercase, then drop punctuation outright (no space substitution, so
    // "1,600" becomes "1600").
    std::u32string kept;
    kept.reserve(chars.size());
    for (char32_t cp : chars) {
        cp = unicode::to_lower(cp);
        if (!unicode::is_punctuation(cp)) kept.push_back(cp);
    }

    std::u32string out;
    out.reserve(kept.size());
    std::size_t i = 0;
    while (i < kept.size()) {
        while (i < kept.size() && unicode::is_whitespace(kept[i])) ++i;
        std::size_t start = i;
        while (i < kept.size() && !unicode::is_whitespace(kept[i])) ++i;
        if (i == start) break;
        std::u32string_view token(kept.data() + start, i - start);
        if (is_article(token)) continue;
        if (!out.empty()) out.push_back(U' ');
        out.append(token);
    }
    return NormalizedText{unicode::encode_utf8(out)};
}

std::vector<std::string> normalized_tokens(std::string_view raw) {
    const std::string norm = normalize(raw).value;
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < norm.size()) {
        std::size_t sp = norm.find(' ', i);
        if (sp == std::string::npos) sp = norm.size();
        tokens.emplace_back(norm.substr(i, sp - i));
        i = sp + 1;
    }
    return tokens;
}

bool exact_match(std::string_view prediction,
                 const std::vector<std::string>& goldens) {
    const NormalizedText pred = normalize(prediction);
    if (goldens.empty()) return pred.value.empty();
    return std::any_of(goldens.begin(), goldens.end(),
                       [&](const std::string& g) { return normalize(g) == pred; });
}

namespace {

double f1_against(const std::vector<std::string>& pred_tokens,
                  const std::vector<std::string>& gold_tokens) {
    if (pred_tokens.empty() || gold_tokens.empty())
        return (pred_tokens.empty() && gold_tokens.empty()) ? 1.0 : 0.0;
    std::map<std::string_view, int> gold_counts;
    for (const auto& t : gold_tokens) ++gold_counts[t];
    int overlap = 0;
    for (const auto& t : pred_tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / pred_tokens.size();
    const double recall = static_cast<double>(overlap) / gold_tokens.size();
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double token_f1(std::string_view prediction,
                const std::vector<std::string>& goldens) {
    const std::vector<std::string> pred_tokens = normalized_tokens(prediction);
    if (goldens.empty()) return pred_tokens.empty() ? 1.0 : 0.0;
    double best = 0.0;
    for (const auto& g : goldens)
        best = std::max(best, f1_against(pred_tokens, normalized_tokens(g)));
    return best;
}

}  // namespace goldrank::textnorm
