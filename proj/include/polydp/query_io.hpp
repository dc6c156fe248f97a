#pragma once

#include <istream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polydp/database.hpp"
#include "polydp/errors.hpp"

namespace polydp {

/// Parses one query object:
///   {"id": "...", "attrs": [names or 1-based indices],
///    "pattern": [0/1,...], "type": "marginal"|"disjunction"}
/// `pattern` omitted means all-ones; "type":"disjunction" selects a
/// monotone disjunction directly (no pattern allowed).
inline Query parse_query_json(const nlohmann::json& j, std::span<const std::string> column_names) {
    if (!j.is_object()) throw parse_error("query: expected a JSON object");
    Query q;
    if (!j.contains("id") || !j["id"].is_string()) throw parse_error("query: missing string 'id'");
    q.id = j["id"].get<std::string>();
    if (!j.contains("attrs") || !j["attrs"].is_array()) throw parse_error("query '" + q.id + "': missing 'attrs' array");

    const int d = static_cast<int>(column_names.size());
    for (const auto& a : j["attrs"]) {
        int idx;
        if (a.is_string()) {
            const std::string name = a.get<std::string>();
            auto it = std::find(column_names.begin(), column_names.end(), name);
            if (it == column_names.end()) throw parse_error("query '" + q.id + "': unknown column '" + name + "'");
            idx = static_cast<int>(it - column_names.begin());
        } else if (a.is_number_integer()) {
            idx = a.get<int>() - 1;  // 1-based on the wire
            if (idx < 0 || idx >= d)
                throw parse_error("query '" + q.id + "': column index out of range");
        } else {
            throw parse_error("query '" + q.id + "': attrs entries must be names or 1-based indices");
        }
        q.attrs.push_back(idx);
    }

    std::vector<std::uint8_t> pattern;
    if (j.contains("pattern")) {
        if (!j["pattern"].is_array()) throw parse_error("query '" + q.id + "': pattern must be an array");
        for (const auto& b : j["pattern"]) {
            int v = b.get<int>();
            if (v != 0 && v != 1) throw parse_error("query '" + q.id + "': pattern bits must be 0/1");
            pattern.push_back(static_cast<std::uint8_t>(v));
        }
        if (pattern.size() != q.attrs.size())
            throw parse_error("query '" + q.id + "': pattern length != attrs length");
    } else {
        pattern.assign(q.attrs.size(), 1);
    }

    std::string type = j.value("type", std::string("marginal"));
    if (type == "disjunction") {
        if (j.contains("pattern")) throw parse_error("query '" + q.id + "': disjunctions take no pattern");
        q.kind = Query::Kind::disjunction;
    } else if (type == "marginal") {
        q.kind = Query::Kind::marginal;
        q.pattern = std::move(pattern);
    } else {
        throw parse_error("query '" + q.id + "': unknown type '" + type + "'");
    }

    // Sort attrs, keeping a marginal's pattern aligned.
    std::vector<std::size_t> order(q.attrs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q.attrs[a] < q.attrs[b]; });
    std::vector<int> attrs_sorted;
    std::vector<std::uint8_t> pattern_sorted;
    for (std::size_t i : order) {
        attrs_sorted.push_back(q.attrs[i]);
        if (!q.pattern.empty()) pattern_sorted.push_back(q.pattern[i]);
    }
    q.attrs = std::move(attrs_sorted);
    q.pattern = std::move(pattern_sorted);
    for (std::size_t i = 1; i < q.attrs.size(); ++i)
        if (q.attrs[i] == q.attrs[i - 1]) throw parse_error("query '" + q.id + "': repeated attribute");
    return q;
}

/// One JSON object per line; blank lines are skipped.
inline QuerySequence load_queries_jsonl(std::istream& is, std::span<const std::string> column_names) {
    QuerySequence seq;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("queries line " + std::to_string(lineno) + ": " + e.what());
        }
        Query q = parse_query_json(j, column_names);
        seq.max_arity = std::max(seq.max_arity, q.arity());
        seq.queries.push_back(std::move(q));
    }
    if (seq.queries.empty()) throw parse_error("load_queries_jsonl: no queries");
    return seq;
}

}  // namespace polydp
