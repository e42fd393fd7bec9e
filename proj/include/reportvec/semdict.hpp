#pragma once

// Semantic dictionaries: ordered variant -> canonical rewrite tables compiled
// from a common-terms TSV and from an offline ontology export, plus the
// token-level scanner that applies them.
//
// Matching works over token n-grams, longest match first with leftmost
// tie-breaking, one pass per dictionary; replacement output is never
// re-scanned by the same dictionary. Tokens fused earlier in the pipeline
// ("no_acute_hemorrhage") are mapped component-wise, which is how a NEGEX
// cue ends up prefixing the mapped remainder ("NEGEX_QUAL_hemorrhage").

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "reportvec/errors.hpp"

namespace rvec {

enum class TermTag { Family, Negex, Risk, Qual, Progress, Domain };

inline std::string to_string(TermTag tag) {
    switch (tag) {
        case TermTag::Family: return "FAMILY";
        case TermTag::Negex: return "NEGEX";
        case TermTag::Risk: return "RISK";
        case TermTag::Qual: return "QUAL";
        case TermTag::Progress: return "PROGRESS";
        case TermTag::Domain: return "DOMAIN";
    }
    return "?";
}

inline TermTag parse_term_tag(const std::string& s) {
    if (s == "FAMILY") return TermTag::Family;
    if (s == "NEGEX") return TermTag::Negex;
    if (s == "RISK") return TermTag::Risk;
    if (s == "QUAL") return TermTag::Qual;
    if (s == "PROGRESS") return TermTag::Progress;
    if (s == "DOMAIN") return TermTag::Domain;
    throw parse_error("unknown dictionary tag '" + s + "'");
}

struct DictEntry {
    std::vector<std::string> variant; // one or more lowercase tokens
    std::string canonical;
    TermTag tag;
};

namespace detail {

inline std::vector<std::string> split_tokens(const std::string& phrase) {
    std::istringstream in(phrase);
    std::vector<std::string> out;
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

inline std::string to_lower_copy(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

inline std::string join(const std::vector<std::string>& tokens, char sep) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += sep;
        out += tokens[i];
    }
    return out;
}

inline bool all_alpha(const std::string& w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) {
        return std::isalpha(c) && std::islower(c);
    });
}

// Plural, -ed and -ing forms of a word, basic English spelling rules only.
inline std::vector<std::string> inflections(const std::string& w) {
    if (!all_alpha(w) || w.size() < 3) return {};
    std::vector<std::string> forms;
    const char last = w.back();
    const std::string stem = w.substr(0, w.size() - 1);
    // plural
    if (last == 'y' && w.size() > 3) {
        forms.push_back(stem + "ies");
    } else if (last == 's' || last == 'x' || last == 'z' ||
               (w.size() >= 2 && (w.compare(w.size() - 2, 2, "ch") == 0 ||
                                  w.compare(w.size() - 2, 2, "sh") == 0))) {
        forms.push_back(w + "es");
    } else {
        forms.push_back(w + "s");
    }
    // past
    if (last == 'e') {
        forms.push_back(w + "d");
    } else if (last == 'y' && w.size() > 3) {
        forms.push_back(stem + "ied");
    } else {
        forms.push_back(w + "ed");
    }
    // gerund
    if (last == 'e' && w.size() > 3) {
        forms.push_back(stem + "ing");
    } else {
        forms.push_back(w + "ing");
    }
    return forms;
}

} // namespace detail

class SemanticDictionary {
public:
    // Adds an explicit entry. A variant mapping to two different canonicals is
    // a load error; an exact duplicate is ignored.
    void add_entry(std::vector<std::string> variant, std::string canonical, TermTag tag) {
        if (variant.empty()) throw validation_error("dictionary variant must not be empty");
        for (const auto& v : variant) {
            for (char c : v) {
                if (std::isupper(static_cast<unsigned char>(c))) {
                    throw validation_error("dictionary variant '" + detail::join(variant, ' ') +
                                           "' must be lowercase");
                }
            }
        }
        const std::string key = detail::join(variant, ' ');
        if (auto it = variant_to_canonical_.find(key); it != variant_to_canonical_.end()) {
            if (it->second != canonical) {
                throw validation_error("variant '" + key + "' maps to both '" + it->second +
                                       "' and '" + canonical + "'");
            }
            return;
        }
        if (canonicals_.count(key)) {
            throw validation_error("variant '" + key + "' is already a canonical token");
        }
        if (variant_to_canonical_.count(canonical)) {
            throw validation_error("canonical '" + canonical + "' is already a variant");
        }
        insert(variant, canonical, tag);
    }

    // Spelling-rule inflections of every variant's final token, added after
    // the explicit entries; collisions with existing entries are skipped.
    void add_inflected_variants() {
        const auto base = entries_; // snapshot; insertion invalidates iteration
        for (const auto& e : base) {
            for (const auto& form : detail::inflections(e.variant.back())) {
                auto variant = e.variant;
                variant.back() = form;
                const std::string key = detail::join(variant, ' ');
                if (variant_to_canonical_.count(key) || canonicals_.count(key)) continue;
                insert(variant, e.canonical, e.tag);
            }
        }
    }

    const std::vector<DictEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t max_variant_tokens() const { return max_variant_tokens_; }
    bool is_canonical(const std::string& token) const { return canonicals_.count(token) > 0; }

    // Longest variant match starting at position i; returns (token count,
    // canonical) or token count 0.
    std::pair<std::size_t, const std::string*> longest_match(
        const std::vector<std::string>& tokens, std::size_t i) const {
        int node = 0;
        std::size_t best_len = 0;
        const std::string* best = nullptr;
        for (std::size_t k = 0; i + k < tokens.size() && k < max_variant_tokens_; ++k) {
            const auto it = nodes_[node].children.find(tokens[i + k]);
            if (it == nodes_[node].children.end()) break;
            node = it->second;
            if (nodes_[node].entry >= 0) {
                best_len = k + 1;
                best = &entries_[nodes_[node].entry].canonical;
            }
        }
        return {best_len, best};
    }

private:
    struct Node {
        std::unordered_map<std::string, int> children;
        int entry = -1;
    };

    void insert(const std::vector<std::string>& variant, const std::string& canonical,
                TermTag tag) {
        int node = 0;
        for (const auto& tok : variant) {
            auto [it, inserted] = nodes_[node].children.try_emplace(tok, 0);
            if (inserted) {
                it->second = static_cast<int>(nodes_.size());
                nodes_.emplace_back();
            }
            node = it->second;
        }
        nodes_[node].entry = static_cast<int>(entries_.size());
        entries_.push_back({variant, canonical, tag});
        variant_to_canonical_.emplace(detail::join(variant, ' '), canonical);
        canonicals_.insert(canonical);
        max_variant_tokens_ = std::max(max_variant_tokens_, variant.size());
    }

    std::vector<Node> nodes_{1};
    std::vector<DictEntry> entries_;
    std::unordered_map<std::string, std::string> variant_to_canonical_;
    std::unordered_set<std::string> canonicals_;
    std::size_t max_variant_tokens_ = 0;
};

// ---------------------------------------------------------------------------
// Loading

// dictionary.tsv: variant<TAB>canonical<TAB>tag, '#' comments.
inline SemanticDictionary load_common_dictionary(const std::string& path,
                                                 bool expand_inflections = true) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    SemanticDictionary dict;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos; start = pos + 1) {
            fields.push_back(line.substr(start, pos - start));
        }
        fields.push_back(line.substr(start));
        if (fields.size() != 3) {
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": expected variant<TAB>canonical<TAB>tag");
        }
        try {
            dict.add_entry(detail::split_tokens(fields[0]), fields[1], parse_term_tag(fields[2]));
        } catch (const std::exception& e) {
            throw validation_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (expand_inflections) dict.add_inflected_variants();
    return dict;
}

inline void save_dictionary(const SemanticDictionary& dict, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    for (const auto& e : dict.entries()) {
        out << detail::join(e.variant, ' ') << '\t' << e.canonical << '\t' << to_string(e.tag)
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// Ontology export -> domain dictionary

struct OntologyRow {
    std::string term_id;
    std::string label;
    std::string parent_id; // empty for roots
    std::vector<std::string> synonyms;
};

struct OntologyExport {
    std::vector<OntologyRow> rows;
    std::unordered_map<std::string, std::size_t> by_id;
};

// ontology export: term_id<TAB>label<TAB>parent_id<TAB>syn1|syn2|... ('#' comments)
inline OntologyExport load_ontology_export(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    OntologyExport exp;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos; start = pos + 1) {
            fields.push_back(line.substr(start, pos - start));
        }
        fields.push_back(line.substr(start));
        if (fields.size() < 3 || fields.size() > 4) {
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": expected term_id<TAB>label<TAB>parent_id[<TAB>synonyms]");
        }
        OntologyRow row;
        row.term_id = fields[0];
        row.label = fields[1];
        row.parent_id = fields[2] == "-" ? "" : fields[2];
        if (fields.size() == 4 && !fields[3].empty()) {
            std::size_t s = 0;
            for (std::size_t pos; (pos = fields[3].find('|', s)) != std::string::npos; s = pos + 1) {
                row.synonyms.push_back(fields[3].substr(s, pos - s));
            }
            row.synonyms.push_back(fields[3].substr(s));
        }
        if (row.label.empty()) {
            throw validation_error(path + ":" + std::to_string(lineno) + ": empty label");
        }
        if (!exp.by_id.emplace(row.term_id, exp.rows.size()).second) {
            throw validation_error(path + ":" + std::to_string(lineno) + ": duplicate term id '" +
                                   row.term_id + "'");
        }
        exp.rows.push_back(std::move(row));
    }
    return exp;
}

namespace detail {

inline std::string normalize_term(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (c == ' ') {
            out += '_';
        } else {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return out;
}

} // namespace detail

// Every descendant's preferred label and all synonyms (plus the root's own
// synonyms) map to the root's canonical token, transitively over subclass
// edges.
inline SemanticDictionary compile_domain_dictionary(const OntologyExport& exp,
                                                    const std::vector<std::string>& roots,
                                                    bool expand_inflections = true) {
    // children adjacency + cycle check over the parent graph
    std::unordered_map<std::string, std::vector<std::size_t>> children;
    for (std::size_t i = 0; i < exp.rows.size(); ++i) {
        const auto& row = exp.rows[i];
        if (row.parent_id.empty()) continue;
        if (!exp.by_id.count(row.parent_id)) {
            throw validation_error("ontology row '" + row.term_id + "' references unknown parent '" +
                                   row.parent_id + "'");
        }
        children[row.parent_id].push_back(i);
    }
    for (const auto& row : exp.rows) {
        std::unordered_set<std::string> seen;
        const OntologyRow* cur = &row;
        while (!cur->parent_id.empty()) {
            if (!seen.insert(cur->term_id).second) {
                throw validation_error("ontology cycle through term '" + cur->term_id + "'");
            }
            cur = &exp.rows[exp.by_id.at(cur->parent_id)];
        }
    }

    SemanticDictionary dict;
    for (const auto& root_id : roots) {
        const auto it = exp.by_id.find(root_id);
        if (it == exp.by_id.end()) throw validation_error("unknown ontology root '" + root_id + "'");
        const auto& root = exp.rows[it->second];
        const std::string canonical = detail::normalize_term(root.label);

        std::vector<std::size_t> stack{it->second};
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            const auto& row = exp.rows[idx];
            auto add = [&](const std::string& phrase) {
                auto toks = detail::split_tokens(detail::to_lower_copy(phrase));
                if (toks.empty()) return;
                if (toks.size() == 1 && toks[0] == canonical) return; // never map the root to itself
                dict.add_entry(std::move(toks), canonical, TermTag::Domain);
            };
            if (idx != it->second) add(row.label);
            for (const auto& syn : row.synonyms) add(syn);
            if (auto ch = children.find(row.term_id); ch != children.end()) {
                for (std::size_t c : ch->second) stack.push_back(c);
            }
        }
    }
    if (expand_inflections) dict.add_inflected_variants();
    return dict;
}

// ---------------------------------------------------------------------------
// Mapping

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t pos; (pos = s.find(sep, start)) != std::string::npos; start = pos + 1) {
        out.push_back(s.substr(start, pos - start));
    }
    out.push_back(s.substr(start));
    return out;
}

inline std::vector<std::string> map_sequence(const std::vector<std::string>& tokens,
                                             const SemanticDictionary& dict, bool map_compounds);

// A fused token ("no_acute_hematoma") is mapped over its components with the
// same longest-match rule and re-joined.
inline std::string map_compound(const std::string& token, const SemanticDictionary& dict) {
    const auto mapped = map_sequence(split_on(token, '_'), dict, /*map_compounds=*/false);
    return join(mapped, '_');
}

inline std::vector<std::string> map_sequence(const std::vector<std::string>& tokens,
                                             const SemanticDictionary& dict, bool map_compounds) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    std::size_t i = 0;
    while (i < tokens.size()) {
        const auto [len, canonical] = dict.longest_match(tokens, i);
        if (len > 0) {
            out.push_back(*canonical);
            i += len;
            continue;
        }
        const std::string& tok = tokens[i];
        if (map_compounds && tok.find('_') != std::string::npos) {
            out.push_back(map_compound(tok, dict));
        } else {
            out.push_back(tok);
        }
        ++i;
    }
    return out;
}

} // namespace detail

// Applies each dictionary in order (common terms first, then domain), one
// pass per dictionary.
inline std::vector<std::string> map_tokens(const std::vector<std::string>& tokens,
                                           const std::vector<const SemanticDictionary*>& dictionaries) {
    std::vector<std::string> out = tokens;
    for (const auto* dict : dictionaries) {
        out = detail::map_sequence(out, *dict, /*map_compounds=*/true);
    }
    return out;
}

inline std::vector<std::string> map_tokens(const std::vector<std::string>& tokens,
                                           const SemanticDictionary& dict) {
    return map_tokens(tokens, std::vector<const SemanticDictionary*>{&dict});
}

// ---------------------------------------------------------------------------
// Throughput measurement

// Steady-state scanner throughput in bytes of report text per millisecond:
// one untimed warm-up pass, then a timed pass over the whole corpus.
inline double scan_throughput(const std::vector<std::vector<std::string>>& corpus,
                              const std::vector<const SemanticDictionary*>& dictionaries) {
    std::size_t total_bytes = 0;
    for (const auto& report : corpus) {
        for (const auto& t : report) total_bytes += t.size() + 1; // token + separator
    }
    if (total_bytes < (1u << 20)) {
        throw validation_error("scan_throughput: corpus must be at least 1 MB of text");
    }
    std::size_t sink = 0;
    for (const auto& report : corpus) sink += map_tokens(report, dictionaries).size();
    const auto start = std::chrono::steady_clock::now();
    for (const auto& report : corpus) sink += map_tokens(report, dictionaries).size();
    const auto stop = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
    if (sink == 0 || ms <= 0.0) return 0.0;
    return static_cast<double>(total_bytes) / ms;
}

} // namespace rvec
