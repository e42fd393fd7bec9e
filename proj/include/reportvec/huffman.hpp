#pragma once

#include <cstdint>
#include <queue>
#include <tuple>
#include <vector>

#include "reportvec/errors.hpp"

namespace rvec {

// Binary Huffman coding of the vocabulary by word frequency. Each word gets a
// root-to-leaf path over the V-1 inner nodes; inner node 0 is the root. The
// code bit at each step is 0 for the lighter branch. Merge order breaks
// frequency ties by node id, so the tree is deterministic.
struct HuffmanTree {
    // parallel per-word paths: inner node ids visited from the root, and the
    // branch taken out of each
    std::vector<std::vector<std::uint32_t>> node_path;
    std::vector<std::vector<std::uint8_t>> code_path;
    std::size_t inner_count = 0;
};

inline HuffmanTree build_huffman(const std::vector<long long>& counts) {
    const std::size_t v = counts.size();
    if (v < 2) throw validation_error("build_huffman: need at least two words");

    // nodes 0..v-1 are leaves, v..2v-2 inner (in creation order)
    struct QueueItem {
        long long count;
        std::uint32_t id;
        bool operator>(const QueueItem& o) const {
            return count != o.count ? count > o.count : id > o.id;
        }
    };
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;
    for (std::size_t i = 0; i < v; ++i) {
        queue.push({counts[i], static_cast<std::uint32_t>(i)});
    }
    std::vector<std::uint32_t> parent(2 * v - 1, 0);
    std::vector<std::uint8_t> branch(2 * v - 1, 0);
    std::uint32_t next_id = static_cast<std::uint32_t>(v);
    while (queue.size() > 1) {
        const QueueItem a = queue.top();
        queue.pop();
        const QueueItem b = queue.top();
        queue.pop();
        parent[a.id] = next_id;
        branch[a.id] = 0;
        parent[b.id] = next_id;
        branch[b.id] = 1;
        queue.push({a.count + b.count, next_id});
        ++next_id;
    }

    const std::uint32_t root = next_id - 1;
    HuffmanTree tree;
    tree.inner_count = v - 1;
    tree.node_path.resize(v);
    tree.code_path.resize(v);
    for (std::size_t w = 0; w < v; ++w) {
        std::vector<std::uint32_t> nodes;
        std::vector<std::uint8_t> codes;
        std::uint32_t cur = static_cast<std::uint32_t>(w);
        while (cur != root) {
            nodes.push_back(parent[cur] - static_cast<std::uint32_t>(v)); // inner index 0..v-2
            codes.push_back(branch[cur]);
            cur = parent[cur];
        }
        // collected leaf-to-root; store root-to-leaf
        tree.node_path[w].assign(nodes.rbegin(), nodes.rend());
        tree.code_path[w].assign(codes.rbegin(), codes.rend());
    }
    return tree;
}

} // namespace rvec
