#pragma once

// Random forest of CART trees: bootstrap bagging, Gini impurity splits over
// sqrt(d) candidate features per node, grown to purity (min leaf 1),
// majority vote over trees. Training rows are put into a canonical order
// before any sampling, so the forest is invariant under permutation of the
// training set given the same seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "reportvec/errors.hpp"
#include "reportvec/metrics.hpp"
#include "reportvec/rng.hpp"

namespace rvec {

struct LabeledVector {
    std::string id;
    std::vector<double> features;
    RiskClass label = RiskClass::NoRisk;
};

struct ForestModel {
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        RiskClass leaf_class = RiskClass::NoRisk;
    };
    struct Tree {
        std::vector<Node> nodes;
    };
    std::vector<Tree> trees;
    std::size_t n_features = 0;
    bool single_class = false; // training data had one class: constant classifier
};

namespace detail {

struct TreeBuilder {
    const std::vector<const LabeledVector*>& rows;
    std::vector<std::uint32_t> sample; // bootstrap row ids (into rows)
    Rng rng;
    ForestModel::Tree tree;
    std::size_t n_features;
    std::size_t features_per_split;

    static RiskClass majority(std::span<const std::uint32_t> ids,
                              const std::vector<const LabeledVector*>& rows) {
        std::array<long, kNumClasses> votes{};
        for (const auto id : ids) ++votes[static_cast<int>(rows[id]->label)];
        int best = 0;
        for (int c = 1; c < kNumClasses; ++c) {
            if (votes[c] > votes[best]) best = c;
        }
        return static_cast<RiskClass>(best);
    }

    static double gini(const std::array<long, kNumClasses>& counts, long total) {
        if (total == 0) return 0.0;
        double g = 1.0;
        for (const long c : counts) {
            const double p = static_cast<double>(c) / static_cast<double>(total);
            g -= p * p;
        }
        return g;
    }

    int build(std::vector<std::uint32_t>& ids) {
        std::array<long, kNumClasses> counts{};
        for (const auto id : ids) ++counts[static_cast<int>(rows[id]->label)];
        const long total = static_cast<long>(ids.size());
        const bool pure = std::count_if(counts.begin(), counts.end(),
                                        [](long c) { return c > 0; }) <= 1;
        if (pure || ids.size() < 2) return make_leaf(ids);

        // sample candidate features without replacement
        std::vector<std::uint32_t> candidates(n_features);
        std::iota(candidates.begin(), candidates.end(), 0u);
        for (std::size_t i = 0; i < features_per_split && i + 1 < candidates.size(); ++i) {
            const std::size_t j = i + rng.next_below(candidates.size() - i);
            std::swap(candidates[i], candidates[j]);
        }
        candidates.resize(std::min(features_per_split, candidates.size()));

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_impurity = std::numeric_limits<double>::max();
        std::vector<std::pair<double, std::uint32_t>> values(ids.size());
        for (const auto f : candidates) {
            for (std::size_t i = 0; i < ids.size(); ++i) {
                values[i] = {rows[ids[i]]->features[f], ids[i]};
            }
            std::sort(values.begin(), values.end());
            std::array<long, kNumClasses> left{};
            std::array<long, kNumClasses> right = counts;
            long n_left = 0;
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                const int cls = static_cast<int>(rows[values[i].second]->label);
                ++left[cls];
                --right[cls];
                ++n_left;
                if (values[i].first == values[i + 1].first) continue;
                const long n_right = total - n_left;
                const double impurity =
                    (static_cast<double>(n_left) * gini(left, n_left) +
                     static_cast<double>(n_right) * gini(right, n_right)) /
                    static_cast<double>(total);
                if (impurity < best_impurity) {
                    best_impurity = impurity;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (values[i].first + values[i + 1].first);
                }
            }
        }
        if (best_feature < 0) return make_leaf(ids); // all candidates constant

        std::vector<std::uint32_t> left_ids, right_ids;
        for (const auto id : ids) {
            (rows[id]->features[best_feature] <= best_threshold ? left_ids : right_ids)
                .push_back(id);
        }
        if (left_ids.empty() || right_ids.empty()) return make_leaf(ids);

        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].feature = best_feature;
        tree.nodes[node_id].threshold = best_threshold;
        const int left_child = build(left_ids);
        tree.nodes[node_id].left = left_child;
        const int right_child = build(right_ids);
        tree.nodes[node_id].right = right_child;
        return node_id;
    }

    int make_leaf(std::span<const std::uint32_t> ids) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].leaf_class = majority(ids, rows);
        return node_id;
    }
};

inline bool row_less(const LabeledVector* a, const LabeledVector* b) {
    if (a->features != b->features) {
        return std::lexicographical_compare(a->features.begin(), a->features.end(),
                                            b->features.begin(), b->features.end());
    }
    return static_cast<int>(a->label) < static_cast<int>(b->label);
}

} // namespace detail

inline ForestModel rf_train(const std::vector<LabeledVector>& train, int n_trees,
                            std::uint64_t seed) {
    if (n_trees < 1) throw validation_error("rf_train: need at least one tree");
    if (train.empty()) throw validation_error("rf_train: empty training set");
    const std::size_t n_features = train.front().features.size();
    for (const auto& r : train) {
        if (r.features.size() != n_features) {
            throw validation_error("rf_train: inconsistent feature dimensions");
        }
    }

    // canonical row order: permutation invariance
    std::vector<const LabeledVector*> rows(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) rows[i] = &train[i];
    std::stable_sort(rows.begin(), rows.end(), detail::row_less);

    ForestModel model;
    model.n_features = n_features;
    {
        std::array<bool, kNumClasses> present{};
        for (const auto& r : train) present[static_cast<int>(r.label)] = true;
        model.single_class = std::count(present.begin(), present.end(), true) <= 1;
    }
    const std::size_t features_per_split =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))));

    model.trees.reserve(static_cast<std::size_t>(n_trees));
    for (int t = 0; t < n_trees; ++t) {
        detail::TreeBuilder builder{rows, {}, Rng(derive_seed(seed, 0x464f5245ull + t)),
                                    {},   n_features, features_per_split};
        builder.sample.resize(rows.size());
        for (auto& s : builder.sample) {
            s = static_cast<std::uint32_t>(builder.rng.next_below(rows.size()));
        }
        auto ids = builder.sample;
        builder.build(ids);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

inline RiskClass rf_predict(const ForestModel& model, std::span<const double> features) {
    if (features.size() != model.n_features) {
        throw validation_error("rf_predict: feature dimension mismatch");
    }
    std::array<long, kNumClasses> votes{};
    for (const auto& tree : model.trees) {
        int node = 0;
        while (tree.nodes[node].feature >= 0) {
            node = features[tree.nodes[node].feature] <= tree.nodes[node].threshold
                       ? tree.nodes[node].left
                       : tree.nodes[node].right;
        }
        ++votes[static_cast<int>(tree.nodes[node].leaf_class)];
    }
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (votes[c] > votes[best]) best = c;
    }
    return static_cast<RiskClass>(best);
}

} // namespace rvec
