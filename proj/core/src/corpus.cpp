#include "goldrank/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "goldrank/unicode.hpp"

namespace goldrank::corpus {

using nlohmann::json;

std::vector<std::string> Example::golden_texts() const {
    std::vector<std::string> out;
    out.reserve(golden_answers.size());
    for (const auto& g : golden_answers) out.push_back(g.text);
    return out;
}

const char* issue_name(IssueKind kind) {
    switch (kind) {
        case IssueKind::EmptyId:
            return "empty-id";
        case IssueKind::AnswerabilityContradiction:
            return "answerability-contradiction";
        case IssueKind::OffsetOutOfBounds:
            return "offset-out-of-bounds";
        case IssueKind::AnswerTextMismatch:
            return "answer-text-mismatch";
    }
    return "unknown";
}

std::vector<Issue> validate_example(const Example& e) {
    std::vector<Issue> issues;
    if (e.id.empty())
        issues.push_back({IssueKind::EmptyId, "example has an empty id"});
    if (e.is_impossible != e.golden_answers.empty()) {
        std::string msg =
            e.is_impossible
                ? "is_impossible is set but golden answers are present"
                : "example is answerable but has no golden answers";
        issues.push_back({IssueKind::AnswerabilityContradiction, std::move(msg)});
    }
    const std::u32string context = unicode::decode_utf8(e.context);
    for (std::size_t i = 0; i < e.golden_answers.size(); ++i) {
        const GoldenAnswer& g = e.golden_answers[i];
        const std::u32string answer = unicode::decode_utf8(g.text);
        if (g.answer_start < 0 ||
            static_cast<std::size_t>(g.answer_start) + answer.size() >
                context.size()) {
            issues.push_back(
                {IssueKind::OffsetOutOfBounds,
                 "answer " + std::to_string(i) + " at offset " +
                     std::to_string(g.answer_start) + " exceeds context of " +
                     std::to_string(context.size()) + " characters"});
            continue;
        }
        if (context.compare(static_cast<std::size_t>(g.answer_start),
                            answer.size(), answer) != 0) {
            issues.push_back(
                {IssueKind::AnswerTextMismatch,
                 "answer " + std::to_string(i) + " (\"" + g.text +
                     "\") does not equal the context substring at offset " +
                     std::to_string(g.answer_start)});
        }
    }
    return issues;
}

namespace {

Example example_from_json(const json& j) {
    Example e;
    e.id = j.at("id").get<std::string>();
    e.title = j.value("title", std::string{});
    e.question = j.value("question", std::string{});
    e.context = j.value("context", std::string{});
    e.is_impossible = j.value("is_impossible", false);
    if (j.contains("answers")) {
        for (const auto& a : j.at("answers")) {
            GoldenAnswer g;
            g.text = a.at("text").get<std::string>();
            g.answer_start = a.at("answer_start").get<std::int64_t>();
            e.golden_answers.push_back(std::move(g));
        }
    }
    return e;
}

std::vector<Example> parse_squad_layout(const json& root,
                                        const std::string& path) {
    if (!root.contains("data") || !root.at("data").is_array())
        throw std::runtime_error(path + ": expected a top-level \"data\" array");
    std::vector<Example> examples;
    for (const auto& article : root.at("data")) {
        const std::string title = article.value("title", std::string{});
        for (const auto& paragraph : article.at("paragraphs")) {
            const std::string context =
                paragraph.at("context").get<std::string>();
            for (const auto& qa : paragraph.at("qas")) {
                Example e = example_from_json(qa);
                e.title = title;
                e.context = context;
                examples.push_back(std::move(e));
            }
        }
    }
    return examples;
}

std::vector<Example> parse_jsonl(std::istream& in, const std::string& path) {
    std::vector<Example> examples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
            examples.push_back(example_from_json(j));
        } catch (const json::exception& ex) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": " + ex.what());
        }
    }
    return examples;
}

}  // namespace

LoadResult load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    std::vector<Example> flat;
    json root = json::parse(content, nullptr, /*allow_exceptions=*/false);
    if (!root.is_discarded() && root.is_object()) {
        try {
            flat = parse_squad_layout(root, path);
        } catch (const json::exception& ex) {
            throw std::runtime_error(path + ": malformed dataset: " + ex.what());
        }
    } else {
        std::istringstream lines(content);
        flat = parse_jsonl(lines, path);
    }

    std::unordered_map<std::string, std::size_t> seen;
    LoadResult result;
    result.dataset.source_path = path;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        Example& e = flat[i];
        if (!e.id.empty()) {
            auto [it, inserted] = seen.emplace(e.id, i);
            if (!inserted)
                throw std::runtime_error(
                    path + ": duplicate id \"" + e.id + "\" at entries " +
                    std::to_string(it->second) + " and " + std::to_string(i));
        }
        std::vector<Issue> issues = validate_example(e);
        if (issues.empty())
            result.dataset.examples.push_back(std::move(e));
        else
            result.discarded.push_back({std::move(e), std::move(issues)});
    }
    return result;
}

std::pair<Dataset, Dataset> split_answerability(const Dataset& d) {
    Dataset answerable{{}, d.source_path};
    Dataset unanswerable{{}, d.source_path};
    for (const Example& e : d.examples)
        (e.is_impossible ? unanswerable : answerable).examples.push_back(e);
    return {std::move(answerable), std::move(unanswerable)};
}

void write_dataset_jsonl(const Dataset& d, std::ostream& out) {
    for (const Example& e : d.examples) {
        json answers = json::array();
        for (const auto& g : e.golden_answers)
            answers.push_back({{"text", g.text}, {"answer_start", g.answer_start}});
        json j{{"id", e.id},
               {"title", e.title},
               {"question", e.question},
               {"context", e.context},
               {"answers", std::move(answers)},
               {"is_impossible", e.is_impossible}};
        out << j.dump() << '\n';
    }
}

std::unordered_map<std::string, std::size_t> index_by_id(const Dataset& d) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(d.examples.size());
    for (std::size_t i = 0; i < d.examples.size(); ++i)
        index.emplace(d.examples[i].id, i);
    return index;
}

}  // namespace goldrank::corpus
