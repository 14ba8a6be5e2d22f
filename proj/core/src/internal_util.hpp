#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "goldrank/rank.hpp"

// Shared formatting helpers, internal to the library.

namespace goldrank::detail {

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

/// Splits one CSV line, honoring double-quote escaping.
inline std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

inline nlohmann::json report_json(const rank::AggregateReport& r) {
    nlohmann::json j{{"experiment", r.experiment},
                     {"em", r.em},
                     {"f1", r.f1},
                     {"grm", r.grm},
                     {"grm_note", "cap-biased"},
                     {"mrr", r.mrr},
                     {"gamma", r.gamma},
                     {"k", r.k},
                     {"rank_histogram", r.rank_histogram},
                     {"n_examples", r.n_examples},
                     {"n_secondary", r.n_secondary}};
    j["grim"] = r.grim ? nlohmann::json(*r.grim) : nlohmann::json(nullptr);
    j["dgrm"] = r.dgrm ? nlohmann::json(*r.dgrm) : nlohmann::json(nullptr);
    j["farr"] = r.farr ? nlohmann::json(*r.farr) : nlohmann::json(nullptr);
    return j;
}

}  // namespace goldrank::detail
