#pragma once

// Report data model and line-delimited JSON corpus I/O.
//
// reports.jsonl holds one object per line: {"id": ..., "text": ..., "label": ...}
// with label optional. Key order and number formatting are canonical, so
// save -> load -> save reproduces the file byte for byte.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "reportvec/errors.hpp"

namespace rvec {

struct Report {
    std::string id;
    std::string text;
    std::optional<int> label; // 1..5 confidence grade when annotated
};

struct CondensedReport {
    std::string id;
    std::vector<std::string> tokens;
    std::optional<int> label;

    // Condensing may legitimately empty a report; downstream stages skip these.
    bool degenerate() const { return tokens.empty(); }
};

struct CorpusStats {
    std::size_t report_count = 0;
    double mean_tokens_raw = 0.0;
    double mean_tokens_condensed = 0.0;
    double reduction_ratio = 0.0; // mean_raw / mean_condensed, 0 when undefined
};

inline void validate_label(const std::optional<int>& label, const std::string& where) {
    if (label && (*label < 1 || *label > 5)) {
        throw validation_error(where + ": label " + std::to_string(*label) + " outside 1..5");
    }
}

// Number of fields separated by Unicode whitespace. Recognizes ASCII
// whitespace plus NBSP, the general punctuation spaces, line/para
// separators and the ideographic space.
inline std::size_t count_whitespace_tokens(std::string_view text) {
    auto is_space_cp = [](char32_t c) {
        return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
               c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) ||
               c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
    };
    std::size_t count = 0;
    bool in_token = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const unsigned char b = static_cast<unsigned char>(text[i]);
        char32_t cp = b;
        std::size_t len = 1;
        if (b >= 0xF0) {
            len = 4;
        } else if (b >= 0xE0) {
            len = 3;
        } else if (b >= 0xC0) {
            len = 2;
        }
        if (len > 1 && i + len <= text.size()) {
            cp = b & (0xFF >> (len + 1));
            for (std::size_t k = 1; k < len; ++k) {
                cp = (cp << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3F);
            }
        } else {
            len = 1;
        }
        if (is_space_cp(cp)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
        i += len;
    }
    return count;
}

inline std::vector<Report> load_reports(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::vector<Report> reports;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("text") ||
            !j["id"].is_string() || !j["text"].is_string()) {
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": expected object with string fields id, text");
        }
        Report r;
        r.id = j["id"].get<std::string>();
        r.text = j["text"].get<std::string>();
        if (j.contains("label") && !j["label"].is_null()) {
            if (!j["label"].is_number_integer()) {
                throw parse_error(path + ":" + std::to_string(lineno) + ": label must be an integer");
            }
            r.label = j["label"].get<int>();
        }
        validate_label(r.label, path + ":" + std::to_string(lineno));
        if (!seen.insert(r.id).second) {
            throw validation_error(path + ":" + std::to_string(lineno) + ": duplicate report id '" + r.id + "'");
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

inline void save_reports(const std::vector<Report>& reports, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["text"] = r.text;
        if (r.label) j["label"] = *r.label;
        out << j.dump() << '\n';
    }
    if (!out) throw io_error("write failed for " + path);
}

// condensed.jsonl: {"id": ..., "tokens": [...], "label": ...} per line.
inline std::vector<CondensedReport> load_condensed(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::vector<CondensedReport> reports;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("tokens") || !j["tokens"].is_array()) {
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": expected object with fields id, tokens");
        }
        CondensedReport r;
        r.id = j["id"].get<std::string>();
        for (const auto& t : j["tokens"]) r.tokens.push_back(t.get<std::string>());
        if (j.contains("label") && !j["label"].is_null()) r.label = j["label"].get<int>();
        validate_label(r.label, path + ":" + std::to_string(lineno));
        if (!seen.insert(r.id).second) {
            throw validation_error(path + ":" + std::to_string(lineno) + ": duplicate report id '" + r.id + "'");
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

inline void save_condensed(const std::vector<CondensedReport>& reports, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["tokens"] = r.tokens;
        if (r.label) j["label"] = *r.label;
        out << j.dump() << '\n';
    }
    if (!out) throw io_error("write failed for " + path);
}

inline CorpusStats corpus_stats(const std::vector<Report>& raw,
                                const std::vector<CondensedReport>& condensed) {
    if (raw.empty() || condensed.empty()) throw validation_error("corpus_stats: empty corpus");
    if (raw.size() != condensed.size()) {
        throw validation_error("corpus_stats: report count mismatch");
    }
    std::unordered_set<std::string> raw_ids;
    for (const auto& r : raw) raw_ids.insert(r.id);
    for (const auto& c : condensed) {
        if (!raw_ids.count(c.id)) {
            throw validation_error("corpus_stats: id '" + c.id + "' missing from raw corpus");
        }
    }
    CorpusStats s;
    s.report_count = raw.size();
    double raw_total = 0.0;
    double cond_total = 0.0;
    for (const auto& r : raw) raw_total += static_cast<double>(count_whitespace_tokens(r.text));
    for (const auto& c : condensed) cond_total += static_cast<double>(c.tokens.size());
    s.mean_tokens_raw = raw_total / static_cast<double>(raw.size());
    s.mean_tokens_condensed = cond_total / static_cast<double>(condensed.size());
    s.reduction_ratio = s.mean_tokens_condensed > 0.0 ? s.mean_tokens_raw / s.mean_tokens_condensed : 0.0;
    return s;
}

} // namespace rvec
