#pragma once

// Train/test splitting, KNN prediction, unigram baseline features and the
// embedding hyperparameter grid search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reportvec/corpus.hpp"
#include "reportvec/embedding.hpp"
#include "reportvec/errors.hpp"
#include "reportvec/matrix.hpp"
#include "reportvec/metrics.hpp"
#include "reportvec/random_forest.hpp"
#include "reportvec/rng.hpp"
#include "reportvec/vocab.hpp"

namespace rvec {

struct SplitResult {
    std::vector<LabeledVector> train;
    std::vector<LabeledVector> test;
    std::vector<std::string> warnings;
};

// Random split by seeded permutation. The training share is round(fraction*N),
// which reproduces an 80/20 split of 1188 items as 950/238. Stratified mode
// splits each class separately and preserves input order inside the parts.
inline SplitResult train_test_split(const std::vector<LabeledVector>& data, double fraction,
                                    std::uint64_t seed, bool stratified = false) {
    if (!(fraction > 0.0) || !(fraction < 1.0)) {
        throw validation_error("split fraction must lie in (0, 1)");
    }
    if (data.empty()) throw validation_error("train_test_split: empty input");

    SplitResult result;
    Rng rng(derive_seed(seed, 0x53504c49ull));
    auto split_indices = [&](const std::vector<std::uint32_t>& pool, std::size_t n_train) {
        auto shuffled = pool;
        rng.shuffle(shuffled);
        for (std::size_t i = 0; i < shuffled.size(); ++i) {
            (i < n_train ? result.train : result.test).push_back(data[shuffled[i]]);
        }
    };
    if (stratified) {
        for (int c = 0; c < kNumClasses; ++c) {
            std::vector<std::uint32_t> pool;
            for (std::uint32_t i = 0; i < data.size(); ++i) {
                if (static_cast<int>(data[i].label) == c) pool.push_back(i);
            }
            if (pool.empty()) continue;
            split_indices(pool, static_cast<std::size_t>(
                                    std::llround(fraction * static_cast<double>(pool.size()))));
        }
    } else {
        std::vector<std::uint32_t> pool(data.size());
        for (std::uint32_t i = 0; i < data.size(); ++i) pool[i] = i;
        split_indices(pool, static_cast<std::size_t>(
                                std::llround(fraction * static_cast<double>(data.size()))));
    }

    std::array<bool, kNumClasses> in_data{}, in_train{};
    for (const auto& r : data) in_data[static_cast<int>(r.label)] = true;
    for (const auto& r : result.train) in_train[static_cast<int>(r.label)] = true;
    for (int c = 0; c < kNumClasses; ++c) {
        if (in_data[c] && !in_train[c]) {
            result.warnings.push_back("class " + to_string(static_cast<RiskClass>(c)) +
                                      " absent from training split");
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// K-nearest neighbors

enum class KnnMetric { Euclidean, Cosine };

// Majority class among the k nearest training points. A vote tie goes to the
// tied class whose member appears first in distance order.
inline RiskClass knn_predict(const std::vector<LabeledVector>& train,
                             std::span<const double> query, std::size_t k,
                             KnnMetric metric = KnnMetric::Euclidean) {
    if (train.empty()) throw validation_error("knn_predict: empty training set");
    if (k < 1 || k > train.size()) {
        throw validation_error("knn_predict: k must lie in 1..|train|");
    }
    std::vector<std::pair<double, std::uint32_t>> dist(train.size());
    for (std::uint32_t i = 0; i < train.size(); ++i) {
        double d;
        if (metric == KnnMetric::Euclidean) {
            d = squared_distance(train[i].features, query);
        } else {
            d = 1.0 - cosine(train[i].features, query);
        }
        dist[i] = {d, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::array<long, kNumClasses> votes{};
    for (std::size_t i = 0; i < k; ++i) {
        ++votes[static_cast<int>(train[dist[i].second].label)];
    }
    const long max_votes = *std::max_element(votes.begin(), votes.end());
    for (std::size_t i = 0; i < k; ++i) {
        const int cls = static_cast<int>(train[dist[i].second].label);
        if (votes[cls] == max_votes) return static_cast<RiskClass>(cls);
    }
    return train[dist[0].second].label;
}

// ---------------------------------------------------------------------------
// Unigram baseline features

struct SparseCounts {
    std::vector<std::pair<std::uint32_t, double>> items; // (vocab index, count)
    std::size_t dim = 0;

    std::vector<double> to_dense() const {
        std::vector<double> v(dim, 0.0);
        for (const auto& [i, c] : items) v[i] = c;
        return v;
    }
};

// Per-report term counts over a fixed vocabulary (built from the training
// split only); out-of-vocabulary tokens contribute nothing.
inline std::vector<SparseCounts> unigram_features(
    const std::vector<std::vector<std::string>>& corpus, const Vocabulary& vocab,
    bool tf_idf = false) {
    std::vector<SparseCounts> out;
    out.reserve(corpus.size());
    std::vector<long> doc_freq;
    if (tf_idf) {
        doc_freq.assign(vocab.size(), 0);
        for (const auto& report : corpus) {
            std::vector<bool> seen(vocab.size(), false);
            for (const auto& t : report) {
                if (const auto idx = vocab.lookup(t); idx && !seen[*idx]) {
                    seen[*idx] = true;
                    ++doc_freq[*idx];
                }
            }
        }
    }
    for (const auto& report : corpus) {
        std::map<std::uint32_t, double> counts;
        for (const auto& t : report) {
            if (const auto idx = vocab.lookup(t)) counts[*idx] += 1.0;
        }
        SparseCounts sc;
        sc.dim = vocab.size();
        sc.items.assign(counts.begin(), counts.end());
        if (tf_idf) {
            const double n_docs = static_cast<double>(corpus.size());
            for (auto& [i, c] : sc.items) {
                c *= std::log((1.0 + n_docs) / (1.0 + static_cast<double>(doc_freq[i]))) + 1.0;
            }
        }
        out.push_back(std::move(sc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grid search over (window, dimension)

enum class ClassifierKind { RandomForest, Knn };

struct GridSearchSpec {
    std::vector<int> windows;
    std::vector<int> dims;
    int folds = 5;
    ClassifierKind classifier = ClassifierKind::RandomForest;
    int knn_k = 10;
    int rf_trees = 100;
    std::uint64_t seed = 1;

    void validate() const {
        if (folds < 2) throw validation_error("grid search needs folds >= 2");
        if (windows.empty() || dims.empty()) {
            throw validation_error("grid search candidate lists must be non-empty");
        }
    }
};

struct GridCell {
    int window = 0;
    int dim = 0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    bool ok = false;
    std::string error;
};

struct GridSearchResult {
    int best_window = 0;
    int best_dim = 0;
    std::vector<GridCell> cells;
};

namespace detail {

inline double cv_weighted_f1(const std::vector<LabeledVector>& data, int folds,
                             ClassifierKind classifier, int knn_k, int rf_trees,
                             std::uint64_t seed, double* std_out) {
    std::vector<std::uint32_t> order(data.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x43564f4cull));
    rng.shuffle(order);

    std::vector<double> scores;
    for (int f = 0; f < folds; ++f) {
        std::vector<LabeledVector> train, test;
        for (std::size_t i = 0; i < order.size(); ++i) {
            (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? test : train)
                .push_back(data[order[i]]);
        }
        if (train.empty() || test.empty()) continue;
        std::vector<RiskClass> pred, truth;
        if (classifier == ClassifierKind::RandomForest) {
            const auto model = rf_train(train, rf_trees, derive_seed(seed, 0x52460000ull + f));
            for (const auto& t : test) {
                pred.push_back(rf_predict(model, t.features));
                truth.push_back(t.label);
            }
        } else {
            const std::size_t k = std::min<std::size_t>(knn_k, train.size());
            for (const auto& t : test) {
                pred.push_back(knn_predict(train, t.features, k));
                truth.push_back(t.label);
            }
        }
        scores.push_back(evaluate(pred, truth).weighted_f1);
    }
    if (scores.empty()) throw validation_error("cross-validation produced no folds");
    double mean = 0.0;
    for (const double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (const double s : scores) var += (s - mean) * (s - mean);
    if (std_out) *std_out = std::sqrt(var / static_cast<double>(scores.size()));
    return mean;
}

} // namespace detail

// For every (window, dim) pair: retrain the embedding on the full corpus,
// rebuild document vectors for the labeled reports, and score the classifier
// by k-fold cross-validation on weighted F1. Failed cells are recorded and
// excluded from the argmax.
inline GridSearchResult grid_search(const std::vector<CondensedReport>& corpus,
                                    const GridSearchSpec& spec, TrainConfig base_config,
                                    int vocab_min_count = 5) {
    spec.validate();
    std::vector<std::vector<std::string>> token_lists;
    token_lists.reserve(corpus.size());
    for (const auto& r : corpus) token_lists.push_back(r.tokens);

    GridSearchResult result;
    double best_score = -1.0;
    for (const int window : spec.windows) {
        for (const int dim : spec.dims) {
            GridCell cell;
            cell.window = window;
            cell.dim = dim;
            try {
                TrainConfig config = base_config;
                config.window = window;
                config.dim = dim;
                config.seed = derive_seed(spec.seed, 0x47524944ull);
                const auto vocab = build_vocabulary(token_lists, vocab_min_count);
                const auto model = train(token_lists, vocab, config);
                std::vector<LabeledVector> labeled;
                for (const auto& r : corpus) {
                    if (!r.label || r.degenerate()) continue;
                    LabeledVector lv;
                    lv.id = r.id;
                    lv.label = regroup_label(*r.label);
                    lv.features = embed_document(model, r.id, r.tokens).vector;
                    labeled.push_back(std::move(lv));
                }
                if (labeled.size() < static_cast<std::size_t>(spec.folds)) {
                    throw validation_error("fewer labeled reports than folds");
                }
                cell.mean_f1 = detail::cv_weighted_f1(labeled, spec.folds, spec.classifier,
                                                      spec.knn_k, spec.rf_trees, spec.seed,
                                                      &cell.std_f1);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
            if (cell.ok && cell.mean_f1 > best_score) {
                best_score = cell.mean_f1;
                result.best_window = window;
                result.best_dim = dim;
            }
            result.cells.push_back(std::move(cell));
        }
    }
    if (best_score < 0.0) throw validation_error("grid search: every cell failed");
    return result;
}

} // namespace rvec
