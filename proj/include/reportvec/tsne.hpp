#pragma once

// Exact O(N^2) t-SNE for projecting word or document vectors to 2-D.
//
// High-dimensional affinities use per-point Gaussian kernels whose bandwidth
// is found by bisection so each row's perplexity (2^entropy) hits the target;
// the low-dimensional kernel is Student-t with one degree of freedom and the
// map is optimized by gradient descent on KL(P || Q) with momentum and early
// exaggeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "reportvec/errors.hpp"
#include "reportvec/matrix.hpp"
#include "reportvec/rng.hpp"

namespace rvec {

struct ProjectionConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    int momentum_switch_iter = 250;
    double early_exaggeration = 12.0;
    int exaggeration_until = 250;
    std::uint64_t seed = 1;

    void validate(std::size_t n) const {
        if (n < 3) throw validation_error("t-SNE needs at least 3 points");
        if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n - 1))) {
            throw validation_error("perplexity must lie in (1, N-1)");
        }
        if (iterations < 250) throw validation_error("iterations must be >= 250");
    }
};

// Symmetric joint probabilities p_ij with zero diagonal summing to one.
struct AffinityMatrix {
    std::size_t n = 0;
    std::vector<double> p; // row-major n*n

    double at(std::size_t i, std::size_t j) const { return p[i * n + j]; }
};

struct TsneResult {
    Matrix coords; // N x 2
    std::vector<double> kl_trace;
};

namespace detail {

// Squared Euclidean distances; exact duplicate rows get a deterministic
// 1e-10 perturbation so bandwidth search has something to work with.
inline std::vector<double> pairwise_sq_distances(const Matrix& x) {
    Matrix pts = x;
    for (std::size_t i = 1; i < pts.rows; ++i) {
        std::size_t dup_ordinal = 0;
        for (std::size_t j = 0; j < i; ++j) {
            if (std::equal(pts.row(i).begin(), pts.row(i).end(), pts.row(j).begin())) {
                ++dup_ordinal;
                pts.at(i, 0) += 1e-10 * static_cast<double>(dup_ordinal + 1);
                break;
            }
        }
    }
    std::vector<double> d2(pts.rows * pts.rows, 0.0);
    for (std::size_t i = 0; i < pts.rows; ++i) {
        for (std::size_t j = i + 1; j < pts.rows; ++j) {
            const double d = squared_distance(pts.row(i), pts.row(j));
            d2[i * pts.rows + j] = d;
            d2[j * pts.rows + i] = d;
        }
    }
    return d2;
}

// Conditional distribution of row i at precision beta; returns its
// perplexity 2^H and fills p (row of length n, diagonal forced to zero).
inline double row_perplexity(const std::vector<double>& d2, std::size_t n, std::size_t i,
                             double beta, std::vector<double>& p) {
    double min_d = std::numeric_limits<double>::max();
    for (std::size_t j = 0; j < n; ++j) {
        if (j != i) min_d = std::min(min_d, d2[i * n + j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
            p[j] = 0.0;
            continue;
        }
        p[j] = std::exp(-beta * (d2[i * n + j] - min_d));
        sum += p[j];
    }
    double entropy_nats = 0.0; // of the normalized row
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        p[j] /= sum;
        if (p[j] > 0.0) entropy_nats -= p[j] * std::log(p[j]);
    }
    return std::exp(entropy_nats);
}

} // namespace detail

// Per-row Gaussian bandwidths found by bisection so that each conditional
// row's perplexity matches the target within 1e-4, then symmetrized:
// p_ij = (p_{j|i} + p_{i|j}) / (2N). Rows whose geometry pins the perplexity
// away from the target (for example all-equidistant neighbors) keep their
// best-effort bandwidth once the search interval is exhausted.
inline AffinityMatrix conditional_affinities(const Matrix& x, double perplexity) {
    const std::size_t n = x.rows;
    if (n < 3) throw validation_error("conditional_affinities: need at least 3 points");
    if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n - 1))) {
        throw validation_error("perplexity must lie in (1, N-1)");
    }
    const auto d2 = detail::pairwise_sq_distances(x);

    std::vector<double> conditional(n * n, 0.0);
    std::vector<double> row(n, 0.0);
    constexpr int kMaxSteps = 200;
    constexpr double kTol = 1e-4;
    constexpr double kBetaLimit = 1e200;

    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double perp = detail::row_perplexity(d2, n, i, beta, row);
        int steps = 0;
        bool bracketed = false;
        while (std::abs(perp - perplexity) > kTol && steps < kMaxSteps) {
            if (perp > perplexity) {
                lo = beta; // too flat: sharpen
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (lo + hi);
            } else {
                hi = beta;
                beta = lo == 0.0 ? beta * 0.5 : 0.5 * (lo + hi);
                bracketed = true;
            }
            if (!std::isinf(hi)) bracketed = true;
            if (beta > kBetaLimit || beta < 1.0 / kBetaLimit) break; // unreachable target
            perp = detail::row_perplexity(d2, n, i, beta, row);
            ++steps;
        }
        if (std::abs(perp - perplexity) > kTol && bracketed && steps >= kMaxSteps) {
            throw numeric_error("bandwidth bisection did not converge for row " +
                                std::to_string(i));
        }
        for (std::size_t j = 0; j < n; ++j) conditional[i * n + j] = row[j];
    }

    AffinityMatrix joint;
    joint.n = n;
    joint.p.assign(n * n, 0.0);
    const double inv = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            joint.p[i * n + j] = (conditional[i * n + j] + conditional[j * n + i]) * inv;
        }
    }
    return joint;
}

// KL(P || Q) for the current map; w holds the Student-t weights and z their
// sum, as computed in the optimization loop.
namespace detail {

inline double kl_divergence(const AffinityMatrix& p, const std::vector<double>& w, double z) {
    double kl = 0.0;
    const std::size_t n = p.n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double pij = p.p[i * n + j];
            if (pij <= 0.0) continue;
            const double qij = std::max(w[i * n + j] / z, 1e-12);
            kl += pij * std::log(pij / qij);
        }
    }
    return kl;
}

} // namespace detail

// Gradient of KL(P || Q(Y)) with respect to the 2-D coordinates.
inline Matrix tsne_gradient(const AffinityMatrix& p, const Matrix& y) {
    const std::size_t n = y.rows;
    std::vector<double> w(n * n, 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double wij = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
            w[i * n + j] = wij;
            w[j * n + i] = wij;
            z += 2.0 * wij;
        }
    }
    Matrix grad(n, y.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double wij = w[i * n + j];
            const double mult = 4.0 * (p.p[i * n + j] - wij / z) * wij;
            for (std::size_t k = 0; k < y.cols; ++k) {
                grad.at(i, k) += mult * (y.at(i, k) - y.at(j, k));
            }
        }
    }
    return grad;
}

// KL(P || Q(Y)) evaluated directly; used by gradient oracle tests.
inline double tsne_kl(const AffinityMatrix& p, const Matrix& y) {
    const std::size_t n = y.rows;
    std::vector<double> w(n * n, 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double wij = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
            w[i * n + j] = wij;
            w[j * n + i] = wij;
            z += 2.0 * wij;
        }
    }
    return detail::kl_divergence(p, w, z);
}

inline TsneResult run_tsne(const Matrix& x, const ProjectionConfig& config) {
    config.validate(x.rows);
    const std::size_t n = x.rows;
    const AffinityMatrix p = conditional_affinities(x, config.perplexity);

    Matrix y(n, 2);
    {
        Rng rng(derive_seed(config.seed, 0x54534e45ull));
        for (auto& v : y.data) v = 1e-4 * rng.next_gaussian();
    }
    Matrix velocity(n, 2, 0.0);
    std::vector<double> w(n * n, 0.0);
    TsneResult result;
    result.kl_trace.reserve(static_cast<std::size_t>(config.iterations));

    for (int iter = 1; iter <= config.iterations; ++iter) {
        const double exaggeration = iter <= config.exaggeration_until ? config.early_exaggeration : 1.0;
        const double momentum =
            iter < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;

        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i * n + i] = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double wij = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
                w[i * n + j] = wij;
                w[j * n + i] = wij;
                z += 2.0 * wij;
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            double g0 = 0.0, g1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double wij = w[i * n + j];
                const double mult = 4.0 * (exaggeration * p.p[i * n + j] - wij / z) * wij;
                g0 += mult * (y.at(i, 0) - y.at(j, 0));
                g1 += mult * (y.at(i, 1) - y.at(j, 1));
            }
            velocity.at(i, 0) = momentum * velocity.at(i, 0) - config.learning_rate * g0;
            velocity.at(i, 1) = momentum * velocity.at(i, 1) - config.learning_rate * g1;
        }
        double mean0 = 0.0, mean1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y.at(i, 0) += velocity.at(i, 0);
            y.at(i, 1) += velocity.at(i, 1);
            mean0 += y.at(i, 0);
            mean1 += y.at(i, 1);
        }
        mean0 /= static_cast<double>(n);
        mean1 /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y.at(i, 0) -= mean0;
            y.at(i, 1) -= mean1;
        }

        // trace records the true (unexaggerated) objective
        double z_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double wij = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
                w[i * n + j] = wij;
                w[j * n + i] = wij;
                z_new += 2.0 * wij;
            }
        }
        const double kl = detail::kl_divergence(p, w, z_new);
        if (!std::isfinite(kl)) {
            throw numeric_error("non-finite t-SNE objective at iteration " + std::to_string(iter));
        }
        for (const auto v : y.data) {
            if (!std::isfinite(v)) {
                throw numeric_error("non-finite t-SNE coordinate at iteration " +
                                    std::to_string(iter));
            }
        }
        result.kl_trace.push_back(kl);
    }
    result.coords = std::move(y);
    return result;
}

// ---------------------------------------------------------------------------
// Projection output: TSV rows id<TAB>x<TAB>y[<TAB>label], optional SVG scatter.

inline void write_projection_tsv(const std::string& path, const std::vector<std::string>& ids,
                                 const Matrix& coords,
                                 const std::vector<std::string>& labels = {}) {
    if (ids.size() != coords.rows || (!labels.empty() && labels.size() != ids.size())) {
        throw validation_error("projection output: id/coordinate/label count mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    char buf[64];
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i];
        std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f", coords.at(i, 0), coords.at(i, 1));
        out << buf;
        if (!labels.empty()) out << '\t' << labels[i];
        out << '\n';
    }
}

inline void write_projection_svg(const std::string& path, const Matrix& coords,
                                 const std::vector<int>& class_ids = {}) {
    static const char* kPalette[] = {"#4c78a8", "#f58518", "#e45756", "#72b7b2",
                                     "#54a24b", "#eeca3b", "#b279a2", "#9d755d"};
    const std::size_t n = coords.rows;
    double min0 = 0, max0 = 0, min1 = 0, max1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        min0 = std::min(min0, coords.at(i, 0));
        max0 = std::max(max0, coords.at(i, 0));
        min1 = std::min(min1, coords.at(i, 1));
        max1 = std::max(max1, coords.at(i, 1));
    }
    const double span0 = max0 - min0 > 0 ? max0 - min0 : 1.0;
    const double span1 = max1 - min1 > 0 ? max1 - min1 : 1.0;
    const double size = 800.0, pad = 20.0;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\">\n";
    char buf[160];
    for (std::size_t i = 0; i < n; ++i) {
        const double cx = pad + (coords.at(i, 0) - min0) / span0 * (size - 2 * pad);
        const double cy = pad + (coords.at(i, 1) - min1) / span1 * (size - 2 * pad);
        const char* color =
            class_ids.empty() ? kPalette[0] : kPalette[class_ids[i] % 8 < 0 ? 0 : class_ids[i] % 8];
        std::snprintf(buf, sizeof(buf),
                      "  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\" fill-opacity=\"0.7\"/>\n",
                      cx, cy, color);
        out << buf;
    }
    out << "</svg>\n";
}

} // namespace rvec
