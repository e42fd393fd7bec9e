#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reportvec/errors.hpp"

namespace rvec {

// Word table with dense indices 0..V-1 in descending corpus-frequency order
// (ties by first occurrence in the corpus).
struct Vocabulary {
    std::vector<std::string> words;
    std::vector<long long> counts;
    std::unordered_map<std::string, std::uint32_t> index;
    int min_count = 1;

    std::size_t size() const { return words.size(); }

    std::optional<std::uint32_t> lookup(const std::string& word) const {
        const auto it = index.find(word);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus,
                                   int min_count) {
    if (min_count < 1) throw validation_error("build_vocabulary: min_count must be >= 1");
    std::unordered_map<std::string, std::size_t> first_seen;
    std::unordered_map<std::string, long long> counts;
    std::size_t position = 0;
    for (const auto& report : corpus) {
        for (const auto& t : report) {
            ++counts[t];
            first_seen.emplace(t, position++);
        }
    }
    std::vector<std::string> kept;
    for (const auto& [word, c] : counts) {
        if (c >= min_count) kept.push_back(word);
    }
    std::sort(kept.begin(), kept.end(), [&](const std::string& a, const std::string& b) {
        const long long ca = counts.at(a), cb = counts.at(b);
        if (ca != cb) return ca > cb;
        return first_seen.at(a) < first_seen.at(b);
    });
    if (kept.empty()) {
        throw validation_error("build_vocabulary: no word reaches min_count " +
                               std::to_string(min_count));
    }
    Vocabulary vocab;
    vocab.min_count = min_count;
    vocab.words = std::move(kept);
    vocab.counts.reserve(vocab.words.size());
    for (std::size_t i = 0; i < vocab.words.size(); ++i) {
        vocab.counts.push_back(counts.at(vocab.words[i]));
        vocab.index.emplace(vocab.words[i], static_cast<std::uint32_t>(i));
    }
    return vocab;
}

} // namespace rvec
