#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

#include "reportvec/errors.hpp"
#include "reportvec/rng.hpp"

namespace rvec {

// Walker/Vose alias table for O(1) draws from a fixed discrete distribution.
// Construction is deterministic given the weight order.
class AliasTable {
public:
    explicit AliasTable(const std::vector<double>& weights) {
        const std::size_t n = weights.size();
        if (n == 0) throw validation_error("alias table needs at least one weight");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw validation_error("alias table weights must be non-negative");
            total += w;
        }
        if (total <= 0.0) throw validation_error("alias table weights sum to zero");

        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * static_cast<double>(n) / total;
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            const std::uint32_t s = small.back();
            small.pop_back();
            const std::uint32_t l = large.back();
            large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = scaled[l] + scaled[s] - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        for (std::uint32_t i : large) prob_[i] = 1.0;
        for (std::uint32_t i : small) prob_[i] = 1.0;
    }

    std::uint32_t sample(Rng& rng) const {
        const std::uint32_t slot = static_cast<std::uint32_t>(rng.next_below(prob_.size()));
        return rng.next_double() < prob_[slot] ? slot : alias_[slot];
    }

    std::size_t size() const { return prob_.size(); }

    // exact probability of drawing index i (for distribution tests)
    double probability(std::uint32_t i) const {
        double p = prob_[i];
        for (std::size_t j = 0; j < prob_.size(); ++j) {
            if (alias_[j] == i) p += 1.0 - prob_[j];
        }
        return p / static_cast<double>(prob_.size());
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

// Negative-sampling distribution: unigram counts raised to `power` (0.75 by
// convention) and normalized.
inline AliasTable make_negative_sampler(const std::vector<long long>& counts,
                                        double power = 0.75) {
    std::vector<double> weights(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        weights[i] = std::pow(static_cast<double>(counts[i]), power);
    }
    return AliasTable(weights);
}

} // namespace rvec
