#pragma once

// Report condenser: turns raw report text into a condensed token sequence.
//
// Stage order over a corpus is fixed:
//   extract sections -> clean -> encode negation -> prune rare terms
//   -> mine + apply collocations
// Negation runs before collocation mining so fused pairs cannot straddle a
// negation scope. Rare-term counts are taken before collocation merging.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "reportvec/corpus.hpp"
#include "reportvec/errors.hpp"

namespace rvec {

struct CondenserConfig {
    std::unordered_set<std::string> stopwords;
    std::vector<std::string> boilerplate_phrases; // literal phrases, lowercase
    int min_term_frequency = 50;
    long collocation_min_count = 500; // strict: pairs kept when count > threshold
    std::vector<std::string> negation_cues = {"no", "without", "negative for", "absent"};

    void validate() const {
        if (min_term_frequency < 1) throw validation_error("min_term_frequency must be >= 1");
        if (collocation_min_count < 1) throw validation_error("collocation_min_count must be >= 1");
        for (const auto& cue : negation_cues) {
            for (char c : cue) {
                if (std::isupper(static_cast<unsigned char>(c))) {
                    throw validation_error("negation cue '" + cue + "' must be lowercase");
                }
            }
        }
    }
};

inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        words.insert(line);
    }
    return words;
}

inline std::vector<std::string> load_boilerplate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        phrases.push_back(line);
    }
    return phrases;
}

// Config file keys: stopwords_path, boilerplate_path, min_term_frequency,
// collocation_min_count, negation_cues. Relative paths resolve against the
// config file's directory.
inline CondenserConfig load_condenser_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
    auto resolve = [&path](const std::string& p) {
        if (p.empty() || p.front() == '/') return p;
        auto slash = path.find_last_of('/');
        return slash == std::string::npos ? p : path.substr(0, slash + 1) + p;
    };
    CondenserConfig cfg;
    if (j.contains("stopwords_path")) cfg.stopwords = load_stopwords(resolve(j["stopwords_path"]));
    if (j.contains("boilerplate_path")) {
        cfg.boilerplate_phrases = load_boilerplate(resolve(j["boilerplate_path"]));
    }
    if (j.contains("min_term_frequency")) cfg.min_term_frequency = j["min_term_frequency"].get<int>();
    if (j.contains("collocation_min_count")) {
        cfg.collocation_min_count = j["collocation_min_count"].get<long>();
    }
    if (j.contains("negation_cues")) {
        cfg.negation_cues = j["negation_cues"].get<std::vector<std::string>>();
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Section extraction

struct SectionExtract {
    std::string text;
    bool headers_found = false;
};

namespace detail {

struct HeaderSpan {
    std::size_t begin = 0; // first char of header word
    std::size_t end = 0;   // one past the colon
    std::string name;      // lowercased header word(s)
};

inline bool is_known_header(const std::string& lower) {
    static const std::unordered_set<std::string> known = {
        "findings",  "finding",   "impression", "impressions",      "additional comment",
        "addendum",  "history",   "technique",  "clinical history", "comparison",
        "indication", "exam",     "procedure",  "comment"};
    return known.count(lower) > 0;
}

// A header is a short run of words ending in a colon: either an all-caps run
// (FINDINGS:, CT HEAD:) or a known section name in any case.
inline std::vector<HeaderSpan> find_headers(const std::string& text) {
    std::vector<HeaderSpan> spans;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != ':') continue;
        // walk back over up to three words
        std::size_t word_end = i;
        while (word_end > 0 && text[word_end - 1] == ' ') --word_end;
        std::size_t begin = word_end;
        int words = 0;
        std::size_t scan = word_end;
        std::size_t best_begin = std::string::npos;
        bool best_allcaps = true;
        while (words < 3 && scan > 0) {
            std::size_t we = scan;
            std::size_t ws = we;
            while (ws > 0 && std::isalpha(static_cast<unsigned char>(text[ws - 1]))) --ws;
            if (ws == we) break; // not a letter run
            bool allcaps = true;
            for (std::size_t k = ws; k < we; ++k) {
                if (!std::isupper(static_cast<unsigned char>(text[k]))) allcaps = false;
            }
            best_allcaps = best_allcaps && allcaps && (we - ws) >= 2;
            ++words;
            begin = ws;
            std::string lower = text.substr(begin, i - begin);
            std::transform(lower.begin(), lower.end(), lower.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            while (!lower.empty() && lower.back() == ' ') lower.pop_back();
            if (best_allcaps || is_known_header(lower)) best_begin = begin;
            if (ws == 0 || text[ws - 1] != ' ') break;
            scan = ws - 1;
        }
        if (best_begin == std::string::npos) continue;
        HeaderSpan h;
        h.begin = best_begin;
        h.end = i + 1;
        std::string lower = text.substr(h.begin, i - h.begin);
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        while (!lower.empty() && lower.back() == ' ') lower.pop_back();
        h.name = lower;
        spans.push_back(std::move(h));
    }
    return spans;
}

} // namespace detail

// Returns the text after a FINDINGS header up to the next header plus the
// text after an IMPRESSION header, header tokens removed. When neither
// section is present the whole text comes back with headers_found = false.
inline SectionExtract extract_sections(const std::string& raw_text) {
    const auto headers = detail::find_headers(raw_text);
    auto wanted = [](const std::string& name) {
        return name.rfind("finding", 0) == 0 || name.rfind("impression", 0) == 0;
    };
    std::string out;
    bool found = false;
    for (std::size_t h = 0; h < headers.size(); ++h) {
        if (!wanted(headers[h].name)) continue;
        found = true;
        const std::size_t body_begin = headers[h].end;
        const std::size_t body_end = h + 1 < headers.size() ? headers[h + 1].begin : raw_text.size();
        std::string body = raw_text.substr(body_begin, body_end - body_begin);
        // trim
        const auto first = body.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        const auto last = body.find_last_not_of(" \t\r\n");
        if (!out.empty()) out += ' ';
        out += body.substr(first, last - first + 1);
    }
    if (!found) return {raw_text, false};
    return {out, true};
}

// ---------------------------------------------------------------------------
// Cleaning

namespace detail {

inline const std::vector<std::regex>& datetime_name_patterns() {
    // Fixed inventory, applied to lowercased text:
    //   numeric dates, clock times with optional am/pm, month-name dates,
    //   "dr <name>" and "dictated/signed by <name> <name>" clinician credits.
    static const std::vector<std::regex> patterns = {
        std::regex(R"(\b\d{1,2}[/-]\d{1,2}[/-]\d{2,4}\b)"),
        std::regex(R"(\b\d{4}-\d{1,2}-\d{1,2}\b)"),
        std::regex(R"(\b\d{1,2}:\d{2}(:\d{2})?\s*(am|pm)?\b)"),
        std::regex(R"(\b(january|february|march|april|may|june|july|august|september|october|november|december)\s+\d{1,2},?\s+\d{4}\b)"),
        std::regex(R"(\bdr\.?\s+[a-z]+\b)"),
        std::regex(R"(\b(dictated|signed|reviewed|transcribed)\s+by\s+[a-z]+(\s+[a-z]+)?\b)"),
    };
    return patterns;
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline void erase_phrase(std::string& text, const std::string& phrase) {
    if (phrase.empty()) return;
    std::size_t pos = 0;
    while ((pos = text.find(phrase, pos)) != std::string::npos) {
        text.replace(pos, phrase.size(), " ");
    }
}

inline bool is_separator_token(const std::string& t) {
    return t == "," || t == "." || t == "or" || t == "and";
}

} // namespace detail

// Cleaning pass that keeps structural markers for the negation pass:
// sentence boundaries come through as "." tokens, phrase separators as ","
// tokens, and the coordinators "or"/"and" plus negation cue words survive
// stop-word removal. encode_negation consumes and removes all of them.
inline std::vector<std::string> clean_text_marked(const std::string& section_text,
                                                  const CondenserConfig& config) {
    std::string text = detail::to_lower(section_text);
    for (const auto& phrase : config.boilerplate_phrases) detail::erase_phrase(text, phrase);
    for (const auto& re : detail::datetime_name_patterns()) {
        text = std::regex_replace(text, re, " ");
    }

    std::unordered_set<std::string> keep;
    keep.insert("or");
    keep.insert("and");
    for (const auto& cue : config.negation_cues) {
        std::istringstream cs(cue);
        std::string w;
        while (cs >> w) keep.insert(w);
    }

    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&]() {
        if (current.empty()) return;
        if (!config.stopwords.count(current) || keep.count(current)) tokens.push_back(current);
        current.clear();
    };
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '_' || c >= 0x80) {
            current += ch;
        } else if (ch == '.' || ch == '!' || ch == '?' || ch == ';') {
            // '.' inside a number or abbreviation still ends nothing useful here;
            // numeric dates were already stripped
            flush();
            if (!tokens.empty() && tokens.back() != ".") tokens.push_back(".");
        } else if (ch == ',' || ch == ':') {
            flush();
            if (!tokens.empty() && tokens.back() != "," && tokens.back() != ".") tokens.push_back(",");
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// Fully cleaned tokens: lowercased, punctuation and stop words removed.
inline std::vector<std::string> clean_text(const std::string& section_text,
                                           const CondenserConfig& config) {
    std::vector<std::string> out;
    for (auto& t : clean_text_marked(section_text, config)) {
        if (t == "," || t == ".") continue;
        if (config.stopwords.count(t)) continue;
        out.push_back(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Negation encoding

// Rewrites cue-led scopes into cue-prefixed tokens:
//   no acute hemorrhage , infarction , or mass .
//     -> no_acute_hemorrhage no_infarction no_mass
// A scope ends at the sentence boundary; segments split on "," / "or" /
// "and". All separator tokens and unused cue words are consumed.
inline std::vector<std::string> encode_negation(const std::vector<std::string>& tokens,
                                                const std::vector<std::string>& cues) {
    // cue phrases as token sequences, longest first for greedy matching
    std::vector<std::vector<std::string>> cue_seqs;
    for (const auto& cue : cues) {
        std::istringstream cs(cue);
        std::vector<std::string> seq;
        std::string w;
        while (cs >> w) seq.push_back(w);
        if (!seq.empty()) cue_seqs.push_back(std::move(seq));
    }
    std::sort(cue_seqs.begin(), cue_seqs.end(),
              [](const auto& a, const auto& b) { return a.size() > b.size(); });

    auto match_cue = [&](std::size_t i) -> std::size_t {
        for (const auto& seq : cue_seqs) {
            if (i + seq.size() > tokens.size()) continue;
            bool ok = true;
            for (std::size_t k = 0; k < seq.size(); ++k) {
                if (tokens[i + k] != seq[k]) {
                    ok = false;
                    break;
                }
            }
            if (ok) return seq.size();
        }
        return 0;
    };
    auto cue_label = [](const std::vector<std::string>& toks, std::size_t i, std::size_t n) {
        std::string label;
        for (std::size_t k = 0; k < n; ++k) {
            if (k) label += '_';
            label += toks[i + k];
        }
        return label;
    };

    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        const std::size_t cue_len = match_cue(i);
        if (cue_len == 0) {
            if (!detail::is_separator_token(tokens[i])) out.push_back(tokens[i]);
            ++i;
            continue;
        }
        const std::string label = cue_label(tokens, i, cue_len);
        i += cue_len;
        std::vector<std::string> segment;
        auto flush_segment = [&]() {
            if (segment.empty()) return;
            std::string fused = label;
            for (const auto& t : segment) {
                fused += '_';
                fused += t;
            }
            out.push_back(std::move(fused));
            segment.clear();
        };
        while (i < tokens.size()) {
            const std::string& t = tokens[i];
            if (t == ".") {
                ++i;
                break;
            }
            if (t == "," || t == "or" || t == "and") {
                flush_segment();
                ++i;
                continue;
            }
            if (match_cue(i) > 0) break; // a new cue starts its own scope
            segment.push_back(t);
            ++i;
        }
        flush_segment();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rare-term pruning and collocations

inline std::unordered_map<std::string, long> term_frequencies(
    const std::vector<std::vector<std::string>>& corpus) {
    std::unordered_map<std::string, long> counts;
    for (const auto& report : corpus) {
        for (const auto& t : report) ++counts[t];
    }
    return counts;
}

// Removes every token whose corpus-wide count is below min_freq. The counting
// pass runs over the whole corpus before any removal.
inline std::vector<std::vector<std::string>> prune_rare_terms(
    const std::vector<std::vector<std::string>>& corpus, int min_freq) {
    if (min_freq < 1) throw validation_error("prune_rare_terms: min_freq must be >= 1");
    const auto counts = term_frequencies(corpus);
    std::vector<std::vector<std::string>> out;
    out.reserve(corpus.size());
    for (const auto& report : corpus) {
        std::vector<std::string> kept;
        kept.reserve(report.size());
        for (const auto& t : report) {
            if (counts.at(t) >= min_freq) kept.push_back(t);
        }
        out.push_back(std::move(kept));
    }
    return out;
}

struct CollocationTable {
    std::unordered_map<std::string, long> pairs; // "first second" -> corpus count
    long min_count = 0;

    static std::string key(const std::string& a, const std::string& b) { return a + ' ' + b; }
    bool contains(const std::string& a, const std::string& b) const {
        return pairs.count(key(a, b)) > 0;
    }
    std::size_t size() const { return pairs.size(); }
};

// Adjacent ordered pairs occurring strictly more than min_count times.
inline CollocationTable mine_collocations(const std::vector<std::vector<std::string>>& corpus,
                                          long min_count) {
    if (min_count < 1) throw validation_error("mine_collocations: min_count must be >= 1");
    std::unordered_map<std::string, long> counts;
    for (const auto& report : corpus) {
        for (std::size_t i = 0; i + 1 < report.size(); ++i) {
            ++counts[CollocationTable::key(report[i], report[i + 1])];
        }
    }
    CollocationTable table;
    table.min_count = min_count;
    for (auto& [k, c] : counts) {
        if (c > min_count) table.pairs.emplace(k, c);
    }
    return table;
}

// Single left-to-right pass: a matched pair is emitted as "a_b" and the scan
// advances past both tokens, so fused output never participates in another
// match.
inline std::vector<std::string> apply_collocations(const std::vector<std::string>& tokens,
                                                   const CollocationTable& table) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (i + 1 < tokens.size() && table.contains(tokens[i], tokens[i + 1])) {
            out.push_back(tokens[i] + '_' + tokens[i + 1]);
            i += 2;
        } else {
            out.push_back(tokens[i]);
            ++i;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Whole-corpus pipeline

struct CondenseSummary {
    std::size_t reports_without_sections = 0;
    std::size_t degenerate_reports = 0;
    CollocationTable collocations;
};

inline std::vector<CondensedReport> condense_corpus(const std::vector<Report>& reports,
                                                    const CondenserConfig& config,
                                                    CondenseSummary* summary = nullptr) {
    config.validate();
    CondenseSummary local;
    std::vector<std::vector<std::string>> token_lists;
    token_lists.reserve(reports.size());
    for (const auto& r : reports) {
        const auto extract = extract_sections(r.text);
        if (!extract.headers_found) ++local.reports_without_sections;
        const auto marked = clean_text_marked(extract.text, config);
        token_lists.push_back(encode_negation(marked, config.negation_cues));
    }
    token_lists = prune_rare_terms(token_lists, config.min_term_frequency);
    local.collocations = mine_collocations(token_lists, config.collocation_min_count);

    std::vector<CondensedReport> out;
    out.reserve(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        CondensedReport c;
        c.id = reports[i].id;
        c.label = reports[i].label;
        c.tokens = apply_collocations(token_lists[i], local.collocations);
        if (c.tokens.empty()) ++local.degenerate_reports;
        out.push_back(std::move(c));
    }
    if (summary) *summary = std::move(local);
    return out;
}

} // namespace rvec
