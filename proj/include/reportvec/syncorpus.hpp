#pragma once

// Synthetic labeled report generator. Reports follow the sectioned layout the
// condenser expects (EXAM/HISTORY/FINDINGS/IMPRESSION plus boilerplate and
// clinician/date noise) and every planted structure is recorded in a
// GroundTruth object so pipeline tests have an independent oracle:
//   - per-report section token counts, one unique hapax, negation scopes
//   - corpus-wide collocation pair counts (including sub-threshold controls)
//   - interchangeable synonym pairs and affirmed/negated antonym pairs
//   - per-class discriminative marker groups (a rule on raw text recovers
//     the label with accuracy 1.0)
//
// Class structure: class 0 reports negate target findings and describe
// chronic/benign observations, class 1 hedges them, class 2 asserts them.
// The hedge words, acuity words, target-finding variants and anatomy words
// deliberately occur in all classes (in different frames), so single-token
// counts are weak evidence while frame words carry the class signal.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "reportvec/corpus.hpp"
#include "reportvec/errors.hpp"
#include "reportvec/rng.hpp"

namespace rvec {

struct SynonymGroup {
    std::vector<std::string> members; // interchangeable everywhere they occur
};

struct TemplateSet {
    // class-discriminative frame words (disjoint; index = class)
    std::array<std::vector<std::string>, 3> class_markers;
    // shared content pools (confounders: occur in every class)
    std::vector<std::string> acuity;
    std::vector<std::string> chronicity;
    std::vector<std::string> hedges;
    std::vector<std::string> target_variants; // domain-dictionary variants of the target finding
    std::vector<std::string> anatomy;
    std::vector<std::string> benign_findings; // negatable benign observations
    std::vector<std::string> artifacts;
    std::vector<std::string> neutral; // bulk mid-frequency descriptors
    std::vector<std::string> history_words;
    std::vector<std::string> clinician_names;
    std::vector<std::string> boilerplate;
    std::vector<SynonymGroup> synonym_groups;
    // dedicated adjacent pairs: (first, second, per-report emission probability)
    struct PlantedPair {
        std::string first, second;
        double probability;
    };
    std::vector<PlantedPair> planted_pairs;

    void validate() const {
        std::map<std::string, int> seen;
        for (int c = 0; c < 3; ++c) {
            if (class_markers[c].empty()) {
                throw validation_error("class " + std::to_string(c) +
                                       " has no discriminative marker group");
            }
            for (const auto& w : class_markers[c]) {
                if (!seen.emplace(w, c).second) {
                    throw validation_error("marker '" + w + "' appears in two classes");
                }
            }
        }
        std::map<std::string, int> group_of;
        for (std::size_t g = 0; g < synonym_groups.size(); ++g) {
            for (const auto& w : synonym_groups[g].members) {
                if (!group_of.emplace(w, static_cast<int>(g)).second) {
                    throw validation_error("synonym groups overlap on '" + w + "'");
                }
            }
        }
    }
};

struct GenerationConfig {
    std::size_t n_reports = 2000;
    std::array<double, 3> proportions = {0.80, 0.04, 0.16};
    std::uint64_t seed = 7;
    double synonym_swap_probability = 0.5;
    double negation_probability = 0.9;
    int boilerplate_per_report = 2;

    void validate() const {
        if (n_reports < 1) throw validation_error("n_reports must be >= 1");
        double sum = 0.0;
        for (const double p : proportions) {
            if (p < 0.0 || p > 1.0) throw validation_error("proportions must lie in [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw validation_error("proportions must sum to 1");
        if (synonym_swap_probability < 0.0 || synonym_swap_probability > 1.0 ||
            negation_probability < 0.0 || negation_probability > 1.0) {
            throw validation_error("probabilities must lie in [0,1]");
        }
        if (boilerplate_per_report < 0) throw validation_error("boilerplate count must be >= 0");
    }
};

struct GroundTruth {
    struct ReportTruth {
        std::string id;
        int label = 1;                       // raw 1..5 grade
        int risk_class = 0;                  // 0/1/2 grouping the generator used
        std::size_t section_token_count = 0; // whitespace tokens in findings+impression bodies
        std::string hapax;
        std::vector<std::string> negation_tokens; // expected encoder output for this report
    };
    struct PairCount {
        std::string first, second;
        long count = 0;
    };
    std::vector<ReportTruth> reports;
    std::vector<PairCount> collocations;
    std::vector<std::pair<std::string, std::string>> synonym_pairs;
    // (affirmed token, fused negation as the condenser emits it)
    std::vector<std::pair<std::string, std::string>> antonym_pairs;
    std::array<std::vector<std::string>, 3> class_marker_groups;
};

// ---------------------------------------------------------------------------
// Default template set

namespace detail {

// Deterministic pronounceable pseudo-terms, e.g. "torvelix".
inline std::vector<std::string> pseudo_words(std::size_t count, std::uint64_t salt,
                                             const std::string& suffix = "") {
    static const char* onsets[] = {"b",  "br", "c",  "cr", "d",  "dr", "f",  "fl", "g",  "gl",
                                   "h",  "j",  "k",  "kl", "l",  "m",  "n",  "p",  "pl", "qu",
                                   "r",  "s",  "st", "t",  "tr", "v",  "w",  "x",  "y",  "z"};
    static const char* vowels[] = {"a", "e", "i", "o", "u", "ae", "ia", "io"};
    static const char* codas[] = {"l", "m", "n", "r", "s", "t", "x", "st", "nd", "rm"};
    Rng rng(derive_seed(0x5345454442414e4bull, salt));
    std::vector<std::string> out;
    std::map<std::string, bool> seen;
    while (out.size() < count) {
        std::string w;
        const int syllables = 2 + static_cast<int>(rng.next_below(2));
        for (int s = 0; s < syllables; ++s) {
            w += onsets[rng.next_below(std::size(onsets))];
            w += vowels[rng.next_below(std::size(vowels))];
            if (s + 1 == syllables) w += codas[rng.next_below(std::size(codas))];
        }
        w += suffix;
        if (seen.emplace(w, true).second) out.push_back(std::move(w));
    }
    return out;
}

} // namespace detail

inline TemplateSet default_template_set() {
    TemplateSet t;
    t.class_markers[0] = detail::pseudo_words(30, 101, "ic");
    t.class_markers[1] = detail::pseudo_words(3, 202, "oid");
    t.class_markers[2] = detail::pseudo_words(12, 303, "al");
    t.acuity = {"acute", "new", "recent", "hyperacute", "evolving", "fresh"};
    t.chronicity = {"chronic", "old", "remote", "stable", "unchanged", "resolved", "longstanding"};
    t.hedges = {"probable", "possible", "suspicion", "suspected", "questionable",
                "equivocal", "concerning", "worrisome"};
    t.target_variants = {"hemorrhage", "hematoma",   "contusion", "apoplexy",
                         "bleed",      "microbleed", "extravasation"};
    t.anatomy = {"frontal", "parietal", "temporal", "occipital", "cerebellar", "thalamic",
                 "basal",   "cortical", "subdural", "epidural",  "ventricular", "sulcal",
                 "pontine", "tentorial", "convexity", "vertex"};
    t.benign_findings = {"infarction", "mass",        "edema",    "fracture", "lesion",
                         "swelling",   "effusion",    "hydrocephalus", "herniation"};
    t.artifacts = {"motion", "streak", "beam", "dental", "metallic"};
    t.neutral = detail::pseudo_words(1400, 404);
    t.history_words = detail::pseudo_words(160, 505);
    t.clinician_names = {"smith", "jones", "garcia", "chen", "patel", "murphy", "kim", "rossi"};
    t.boilerplate = {
        "I have personally reviewed the images for this examination and agreed with the report "
        "transcribed above.",
        "Report electronically signed and verified for the medical record.",
        "Thank you for referring this patient to our imaging service.",
    };
    // interchangeable words drawn 50/50 wherever their slot appears
    t.synonym_groups.push_back({{"new", "recent"}});
    t.synonym_groups.push_back({{"stable", "unchanged"}});
    t.synonym_groups.push_back({{"old", "remote"}});
    t.synonym_groups.push_back({{t.class_markers[0][0], t.class_markers[0][1]}});
    t.synonym_groups.push_back({{t.class_markers[2][0], t.class_markers[2][1]}});
    t.planted_pairs.push_back({"midline", "shift", 0.35});
    t.planted_pairs.push_back({"mass", "effect", 0.30});
    t.planted_pairs.push_back({"focal", "abnormality", 0.06}); // stays under threshold
    t.validate();
    return t;
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

// Largest-remainder apportionment; classes with positive proportion are
// guaranteed at least one report (taken from the largest class when the
// remainder rounds them to zero).
inline std::array<std::size_t, 3> apportion_classes(std::size_t n,
                                                    const std::array<double, 3>& proportions) {
    std::size_t positive = 0;
    for (const double p : proportions) {
        if (p > 0.0) ++positive;
    }
    if (n < positive) {
        throw validation_error("cannot apportion " + std::to_string(n) + " reports over " +
                               std::to_string(positive) + " positive-proportion classes");
    }
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int c = 0; c < 3; ++c) {
        const double exact = proportions[c] * static_cast<double>(n);
        counts[c] = static_cast<std::size_t>(exact);
        remainders[c] = exact - static_cast<double>(counts[c]);
        assigned += counts[c];
    }
    while (assigned < n) {
        int best = 0;
        for (int c = 1; c < 3; ++c) {
            if (remainders[c] > remainders[best]) best = c;
        }
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    for (int c = 0; c < 3; ++c) {
        if (proportions[c] > 0.0 && counts[c] == 0) {
            int largest = 0;
            for (int k = 1; k < 3; ++k) {
                if (counts[k] > counts[largest]) largest = k;
            }
            if (counts[largest] <= 1) throw validation_error("proportions unsatisfiable for small n");
            --counts[largest];
            ++counts[c];
        }
    }
    return counts;
}

struct SentenceBuilder {
    const TemplateSet& t;
    Rng& rng;
    const GenerationConfig& config;
    std::map<std::string, const SynonymGroup*> synonym_of;

    explicit SentenceBuilder(const TemplateSet& templates, Rng& r, const GenerationConfig& cfg)
        : t(templates), rng(r), config(cfg) {
        for (const auto& g : t.synonym_groups) {
            for (const auto& w : g.members) synonym_of.emplace(w, &g);
        }
    }

    const std::string& pick(const std::vector<std::string>& pool) {
        return pool[rng.next_below(pool.size())];
    }

    // a slot word, possibly swapped for one of its interchangeable synonyms
    std::string slot(const std::string& word) {
        const auto it = synonym_of.find(word);
        if (it == synonym_of.end()) return word;
        if (!rng.next_bernoulli(config.synonym_swap_probability)) return word;
        return it->second->members[rng.next_below(it->second->members.size())];
    }

    std::string syn_pick(const std::vector<std::string>& pool) { return slot(pick(pool)); }
};

} // namespace detail

inline std::pair<std::vector<Report>, GroundTruth> generate_corpus(const TemplateSet& templates,
                                                                   const GenerationConfig& config) {
    templates.validate();
    config.validate();
    const auto class_counts = detail::apportion_classes(config.n_reports, config.proportions);

    Rng rng(derive_seed(config.seed, 0x47454e43ull));
    std::vector<int> classes;
    classes.reserve(config.n_reports);
    for (int c = 0; c < 3; ++c) {
        classes.insert(classes.end(), class_counts[c], c);
    }
    rng.shuffle(classes);

    GroundTruth truth;
    truth.class_marker_groups = templates.class_markers;
    for (const auto& g : templates.synonym_groups) {
        for (std::size_t i = 0; i + 1 < g.members.size(); ++i) {
            truth.synonym_pairs.emplace_back(g.members[i], g.members[i + 1]);
        }
    }
    // affirmed only in hedged/asserting reports, negated only in class-0 lists
    truth.antonym_pairs.emplace_back("hemorrhage", "no_hemorrhage");
    truth.antonym_pairs.emplace_back("edema", "no_edema");
    std::map<std::string, long> pair_counts;
    for (const auto& p : templates.planted_pairs) pair_counts[p.first + ' ' + p.second] = 0;

    detail::SentenceBuilder sb(templates, rng, config);
    std::vector<Report> reports;
    reports.reserve(config.n_reports);

    for (std::size_t idx = 0; idx < config.n_reports; ++idx) {
        const int cls = classes[idx];
        GroundTruth::ReportTruth rt;
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "r%06zu", idx);
        rt.id = idbuf;
        rt.risk_class = cls;
        rt.label = cls == 0 ? 1 : cls == 2 ? 5 : 2 + static_cast<int>(rng.next_below(3));

        // ---- findings sentences ----
        const int n_neutral = 3 + static_cast<int>(rng.next_below(23)); // heavy length variation
        std::vector<std::string> sentences;

        auto neutral_sentence = [&]() {
            std::string s = "the " + sb.pick(templates.anatomy) + " " + sb.pick(templates.neutral) +
                            " is " + sb.pick(templates.neutral);
            if (rng.next_bernoulli(0.5)) s += " and " + sb.pick(templates.neutral);
            s += " in appearance.";
            return s;
        };
        for (int i = 0; i < n_neutral; ++i) sentences.push_back(neutral_sentence());

        // planted collocation pairs in class-neutral wording
        for (const auto& pp : templates.planted_pairs) {
            if (rng.next_bernoulli(pp.probability)) {
                sentences.push_back("the " + pp.first + " " + pp.second + " is " +
                                    sb.pick(templates.neutral) + " on this study.");
                ++pair_counts[pp.first + ' ' + pp.second];
            }
        }

        // class-neutral confounders: hedged artifacts and chronic benign findings
        if (rng.next_bernoulli(0.5)) {
            sentences.push_back(sb.pick(templates.hedges) + " " + sb.pick(templates.artifacts) +
                                " artifact degrades " + sb.pick(templates.neutral) + " detail.");
        }
        // (edema is reserved for asserting reports, so it stays out of this pool)
        static const std::vector<std::string> confounder_findings = {"infarction", "mass", "lesion",
                                                                     "effusion"};
        if (rng.next_bernoulli(0.5)) {
            sentences.push_back(sb.syn_pick(templates.chronicity) + " " +
                                sb.pick(confounder_findings) + " near the " +
                                sb.pick(templates.anatomy) + " margin.");
        }

        auto marker = [&](int c) { return sb.slot(sb.pick(templates.class_markers[c])); };
        // chronic mentions avoid the bare word "hemorrhage" so its affirmed
        // contexts stay polarized to hedged/asserting reports
        const std::vector<std::string> chronic_variants(templates.target_variants.begin() + 1,
                                                        templates.target_variants.end());

        const int n_frames = 2 + static_cast<int>(rng.next_below(2));
        if (cls == 0) {
            for (int i = 0; i < n_frames; ++i) {
                sentences.push_back("the " + sb.pick(templates.anatomy) + " region is " +
                                    marker(0) + " overall.");
            }
            if (rng.next_bernoulli(0.6)) {
                sentences.push_back(sb.syn_pick(templates.chronicity) + " " +
                                    sb.pick(chronic_variants) + " is " +
                                    sb.syn_pick(templates.chronicity) + " from the earlier study.");
            }
            if (rng.next_bernoulli(config.negation_probability)) {
                if (rng.next_bernoulli(0.08)) {
                    sentences.push_back("No acute hemorrhage, infarction, or mass.");
                    rt.negation_tokens = {"no_acute_hemorrhage", "no_infarction", "no_mass"};
                } else {
                    const std::string a = sb.pick(templates.target_variants);
                    const std::string b = sb.pick(templates.benign_findings);
                    const std::string c = sb.pick(templates.benign_findings);
                    sentences.push_back("no " + a + ", " + b + ", or " + c + ".");
                    rt.negation_tokens = {"no_" + a, "no_" + b, "no_" + c};
                }
            }
        } else if (cls == 1) {
            for (int i = 0; i < n_frames; ++i) {
                sentences.push_back(sb.pick(templates.hedges) + " " +
                                    sb.syn_pick(templates.acuity) + " " +
                                    sb.pick(templates.target_variants) + " in the " +
                                    sb.pick(templates.anatomy) + " region, " + marker(1) +
                                    " in character.");
            }
        } else {
            for (int i = 0; i < n_frames; ++i) {
                sentences.push_back(sb.syn_pick(templates.acuity) + " " +
                                    sb.pick(templates.target_variants) + " in the " +
                                    sb.pick(templates.anatomy) + " region with " + marker(2) +
                                    " features.");
            }
            if (rng.next_bernoulli(0.5)) {
                sentences.push_back("surrounding edema with " + sb.pick(templates.neutral) +
                                    " margins.");
            }
            static const std::vector<std::string> negatable2 = {"fracture", "swelling",
                                                                "hydrocephalus", "herniation"};
            if (rng.next_bernoulli(config.negation_probability * 0.7)) {
                const std::string a = sb.pick(negatable2);
                std::string b = sb.pick(negatable2);
                while (b == a) b = sb.pick(negatable2);
                sentences.push_back("without " + a + " or " + b + ".");
                rt.negation_tokens = {"without_" + a, "without_" + b};
            }
        }
        // normal-region remarks leak class-0 markers into the other classes,
        // so single-token presence is weak evidence
        if (cls != 0) {
            const int n_leaks = 1 + static_cast<int>(rng.next_below(3));
            for (int i = 0; i < n_leaks; ++i) {
                sentences.push_back("the " + sb.pick(templates.anatomy) + " is otherwise " +
                                    marker(0) + ".");
            }
        }

        // one hapax per report, unique by construction
        {
            char hapaxbuf[24];
            std::snprintf(hapaxbuf, sizeof(hapaxbuf), "zq%05zx", idx);
            rt.hapax = hapaxbuf;
            sentences.push_back("incidental " + rt.hapax + " configuration is noted.");
        }

        rng.shuffle(sentences);
        std::string findings;
        for (const auto& s : sentences) {
            if (!findings.empty()) findings += ' ';
            findings += s;
        }

        // ---- impression (medicolegal boilerplate lands inside the section) ----
        std::string impression;
        if (cls == 0) {
            impression = "the " + sb.pick(templates.anatomy) + " study is " + marker(0) + ".";
        } else if (cls == 1) {
            impression = sb.pick(templates.hedges) + " " + sb.pick(templates.target_variants) +
                         ", " + marker(1) + " appearance.";
        } else {
            impression = sb.syn_pick(templates.acuity) + " " + sb.pick(templates.target_variants) +
                         " with " + marker(2) + " extension.";
        }
        impression += " " + templates.boilerplate[0];

        rt.section_token_count =
            count_whitespace_tokens(findings) + count_whitespace_tokens(impression);

        // ---- assemble raw text with noise outside the sections ----
        std::string text;
        const int month = 1 + static_cast<int>(rng.next_below(12));
        const int day = 1 + static_cast<int>(rng.next_below(28));
        const int hour = static_cast<int>(rng.next_below(24));
        const int minute = static_cast<int>(rng.next_below(60));
        char datebuf[48];
        std::snprintf(datebuf, sizeof(datebuf), "%02d/%02d/2015 %02d:%02d", month, day, hour, minute);

        text += "EXAM: ct head performed " + std::string(datebuf) + "\n";
        text += "HISTORY: patient with ";
        const int n_hist = 6 + static_cast<int>(rng.next_below(8));
        for (int i = 0; i < n_hist; ++i) {
            text += sb.pick(templates.history_words) + (i + 1 < n_hist ? " " : "");
        }
        text += " seen by dr " + sb.pick(templates.clinician_names) + "\n";
        for (int i = 0; i < config.boilerplate_per_report; ++i) {
            text += templates.boilerplate[rng.next_below(templates.boilerplate.size())] + "\n";
        }
        text += "FINDINGS: " + findings + "\n";
        text += "IMPRESSION: " + impression + "\n";
        text += "ADDENDUM: dictated by dr " + sb.pick(templates.clinician_names) + " at " +
                datebuf + "\n";

        Report r;
        r.id = rt.id;
        r.text = std::move(text);
        r.label = rt.label;
        reports.push_back(std::move(r));
        truth.reports.push_back(std::move(rt));
    }

    for (const auto& p : templates.planted_pairs) {
        truth.collocations.push_back({p.first, p.second, pair_counts[p.first + ' ' + p.second]});
    }
    return {std::move(reports), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Ground-truth serialization

inline void save_ground_truth(const GroundTruth& truth, const std::string& path) {
    nlohmann::ordered_json j;
    j["reports"] = nlohmann::ordered_json::array();
    for (const auto& r : truth.reports) {
        nlohmann::ordered_json jr;
        jr["id"] = r.id;
        jr["label"] = r.label;
        jr["risk_class"] = r.risk_class;
        jr["section_token_count"] = r.section_token_count;
        jr["hapax"] = r.hapax;
        jr["negation_tokens"] = r.negation_tokens;
        j["reports"].push_back(std::move(jr));
    }
    j["collocations"] = nlohmann::ordered_json::array();
    for (const auto& c : truth.collocations) {
        j["collocations"].push_back({{"first", c.first}, {"second", c.second}, {"count", c.count}});
    }
    j["synonym_pairs"] = truth.synonym_pairs;
    j["antonym_pairs"] = truth.antonym_pairs;
    j["class_marker_groups"] = truth.class_marker_groups;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
    GroundTruth truth;
    for (const auto& jr : j["reports"]) {
        GroundTruth::ReportTruth r;
        r.id = jr["id"].get<std::string>();
        r.label = jr["label"].get<int>();
        r.risk_class = jr["risk_class"].get<int>();
        r.section_token_count = jr["section_token_count"].get<std::size_t>();
        r.hapax = jr["hapax"].get<std::string>();
        r.negation_tokens = jr["negation_tokens"].get<std::vector<std::string>>();
        truth.reports.push_back(std::move(r));
    }
    for (const auto& jc : j["collocations"]) {
        truth.collocations.push_back(
            {jc["first"].get<std::string>(), jc["second"].get<std::string>(), jc["count"].get<long>()});
    }
    truth.synonym_pairs =
        j["synonym_pairs"].get<std::vector<std::pair<std::string, std::string>>>();
    truth.antonym_pairs =
        j["antonym_pairs"].get<std::vector<std::pair<std::string, std::string>>>();
    truth.class_marker_groups =
        j["class_marker_groups"].get<std::array<std::vector<std::string>, 3>>();
    return truth;
}

} // namespace rvec
