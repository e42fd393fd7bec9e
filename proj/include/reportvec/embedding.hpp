#pragma once

// Word-vector training (CBOW / skip-gram under negative sampling or
// hierarchical softmax), similarity queries, document vectors and model I/O.
//
// The hidden vector h is the mean of the context words' input vectors (CBOW)
// or the center word's input vector (skip-gram). Negative sampling minimizes
//   E = -log s(v'_o . h) - sum_{j in neg} log s(-v'_j . h)
// and hierarchical softmax the corresponding Huffman-path objective. Updates
// apply the exact simultaneous gradient of E, including the 1/|context|
// factor on input vectors, so the implementation can be checked against
// finite differences.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "reportvec/errors.hpp"
#include "reportvec/huffman.hpp"
#include "reportvec/matrix.hpp"
#include "reportvec/rng.hpp"
#include "reportvec/sampler.hpp"
#include "reportvec/vocab.hpp"

namespace rvec {

enum class Architecture { Cbow, SkipGram };
enum class Objective { NegativeSampling, HierarchicalSoftmax };

inline std::string to_string(Architecture a) {
    return a == Architecture::Cbow ? "cbow" : "skipgram";
}
inline std::string to_string(Objective o) {
    return o == Objective::NegativeSampling ? "ns" : "hs";
}

struct TrainConfig {
    Architecture architecture = Architecture::Cbow;
    Objective objective = Objective::NegativeSampling;
    int window = 5;
    int dim = 100;
    int negatives = 5;
    int epochs = 5;
    double initial_learning_rate = 0.025;
    std::uint64_t seed = 1;
    int threads = 1;
    double subsample = 0.0; // frequent-word subsampling threshold, 0 = off

    void validate() const {
        if (window < 1) throw validation_error("window must be >= 1");
        if (dim < 2) throw validation_error("dim must be >= 2");
        if (objective == Objective::NegativeSampling && negatives < 1) {
            throw validation_error("negative sampling needs k >= 1");
        }
        if (epochs < 1) throw validation_error("epochs must be >= 1");
        if (initial_learning_rate <= 0.0) throw validation_error("learning rate must be > 0");
        if (threads < 1) throw validation_error("threads must be >= 1");
    }
};

struct EmbeddingModel {
    Vocabulary vocab;
    Matrix input_vectors;  // V x d, one row per word
    Matrix output_vectors; // V x d; inner-node vectors under hierarchical softmax
    TrainConfig config;
    std::vector<double> epoch_mean_loss; // training log, not persisted
};

struct DocumentVector {
    std::string id;
    std::vector<double> vector;
    std::size_t n_known = 0; // in-vocabulary tokens that contributed
};

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// One training example: the input-side words (context words for CBOW, the
// single center word for skip-gram), the output word, and the sampled
// negatives when the objective is negative sampling.
struct TrainExample {
    std::vector<std::uint32_t> inputs;
    std::uint32_t target = 0;
    std::vector<std::uint32_t> negatives;
};

namespace detail {

inline std::vector<double> hidden_vector(const Matrix& input, const TrainExample& ex) {
    std::vector<double> h(input.cols, 0.0);
    for (const auto w : ex.inputs) {
        const auto row = input.row(w);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] += row[i];
    }
    const double inv = 1.0 / static_cast<double>(ex.inputs.size());
    for (auto& x : h) x *= inv;
    return h;
}

} // namespace detail

inline double ns_example_loss(const Matrix& input, const Matrix& output, const TrainExample& ex) {
    const auto h = detail::hidden_vector(input, ex);
    double loss = -log_sigmoid(dot(output.row(ex.target), h));
    for (const auto neg : ex.negatives) {
        loss -= log_sigmoid(-dot(output.row(neg), h));
    }
    return loss;
}

inline double hs_example_loss(const Matrix& input, const Matrix& output, const TrainExample& ex,
                              const HuffmanTree& tree) {
    const auto h = detail::hidden_vector(input, ex);
    double loss = 0.0;
    const auto& nodes = tree.node_path[ex.target];
    const auto& codes = tree.code_path[ex.target];
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double sign = codes[j] == 0 ? 1.0 : -1.0;
        loss -= log_sigmoid(sign * dot(output.row(nodes[j]), h));
    }
    return loss;
}

// Dense full-parameter gradients of the example loss, for oracle checks at
// small V and d.
inline void ns_example_gradients(const Matrix& input, const Matrix& output,
                                 const TrainExample& ex, Matrix& grad_input,
                                 Matrix& grad_output) {
    grad_input = Matrix(input.rows, input.cols, 0.0);
    grad_output = Matrix(output.rows, output.cols, 0.0);
    const auto h = detail::hidden_vector(input, ex);
    std::vector<double> grad_h(h.size(), 0.0);

    auto accumulate = [&](std::uint32_t word, double g) {
        // g = dE/dscore for score = v'_w . h
        const auto row = output.row(word);
        auto grow = grad_output.row(word);
        for (std::size_t i = 0; i < h.size(); ++i) {
            grow[i] += g * h[i];
            grad_h[i] += g * row[i];
        }
    };
    accumulate(ex.target, sigmoid(dot(output.row(ex.target), h)) - 1.0);
    for (const auto neg : ex.negatives) {
        accumulate(neg, sigmoid(dot(output.row(neg), h)));
    }
    const double inv = 1.0 / static_cast<double>(ex.inputs.size());
    for (const auto w : ex.inputs) {
        auto grow = grad_input.row(w);
        for (std::size_t i = 0; i < h.size(); ++i) grow[i] += inv * grad_h[i];
    }
}

inline void hs_example_gradients(const Matrix& input, const Matrix& output,
                                 const TrainExample& ex, const HuffmanTree& tree,
                                 Matrix& grad_input, Matrix& grad_output) {
    grad_input = Matrix(input.rows, input.cols, 0.0);
    grad_output = Matrix(output.rows, output.cols, 0.0);
    const auto h = detail::hidden_vector(input, ex);
    std::vector<double> grad_h(h.size(), 0.0);

    const auto& nodes = tree.node_path[ex.target];
    const auto& codes = tree.code_path[ex.target];
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double sign = codes[j] == 0 ? 1.0 : -1.0;
        const auto row = output.row(nodes[j]);
        const double g = sign * (sigmoid(sign * dot(row, h)) - 1.0);
        auto grow = grad_output.row(nodes[j]);
        for (std::size_t i = 0; i < h.size(); ++i) {
            grow[i] += g * h[i];
            grad_h[i] += g * row[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(ex.inputs.size());
    for (const auto w : ex.inputs) {
        auto grow = grad_input.row(w);
        for (std::size_t i = 0; i < h.size(); ++i) grow[i] += inv * grad_h[i];
    }
}

// In-place gradient step on the rows the example touches. Mathematically the
// same update as -lr times the dense gradients above. Returns the example
// loss evaluated before the update.
inline double apply_example(Matrix& input, Matrix& output, const TrainExample& ex,
                            Objective objective, const HuffmanTree* tree, double lr) {
    const auto h = detail::hidden_vector(input, ex);
    std::vector<double> grad_h(h.size(), 0.0);
    double loss = 0.0;

    if (objective == Objective::NegativeSampling) {
        auto push = [&](std::uint32_t word, double target_label) {
            auto row = output.row(word);
            const double score = dot({row.data(), row.size()}, h);
            loss -= target_label > 0.5 ? log_sigmoid(score) : log_sigmoid(-score);
            const double g = sigmoid(score) - target_label; // dE/dscore
            for (std::size_t i = 0; i < h.size(); ++i) {
                grad_h[i] += g * row[i];
                row[i] -= lr * g * h[i];
            }
        };
        push(ex.target, 1.0);
        for (const auto neg : ex.negatives) push(neg, 0.0);
    } else {
        const auto& nodes = tree->node_path[ex.target];
        const auto& codes = tree->code_path[ex.target];
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double sign = codes[j] == 0 ? 1.0 : -1.0;
            auto row = output.row(nodes[j]);
            const double score = dot({row.data(), row.size()}, h);
            loss -= log_sigmoid(sign * score);
            const double g = sign * (sigmoid(sign * score) - 1.0);
            for (std::size_t i = 0; i < h.size(); ++i) {
                grad_h[i] += g * row[i];
                row[i] -= lr * g * h[i];
            }
        }
    }

    const double scale = lr / static_cast<double>(ex.inputs.size());
    for (const auto w : ex.inputs) {
        auto row = input.row(w);
        for (std::size_t i = 0; i < h.size(); ++i) row[i] -= scale * grad_h[i];
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Trainer

namespace detail {

struct EpochLossAccumulator {
    double sum = 0.0;
    long long examples = 0;
};

inline void train_range(Matrix& input, Matrix& output,
                        const std::vector<std::vector<std::uint32_t>>& seqs, std::size_t begin,
                        std::size_t end, const TrainConfig& config, const AliasTable* sampler,
                        const HuffmanTree* tree, long long total_steps,
                        std::atomic<long long>& processed, std::uint64_t rng_seed, int epoch,
                        EpochLossAccumulator& acc) {
    Rng rng(rng_seed);
    const double floor = 1e-4 * config.initial_learning_rate;
    TrainExample ex;
    ex.negatives.reserve(config.negatives);

    auto draw_negatives = [&](std::uint32_t target) {
        ex.negatives.clear();
        for (int j = 0; j < config.negatives; ++j) {
            std::uint32_t cand = sampler->sample(rng);
            for (int tries = 0; cand == target && tries < 100; ++tries) {
                cand = sampler->sample(rng);
            }
            if (cand != target) ex.negatives.push_back(cand);
        }
    };

    for (std::size_t r = begin; r < end; ++r) {
        const auto& seq = seqs[r];
        for (std::size_t t = 0; t < seq.size(); ++t) {
            const long long step = processed.fetch_add(1, std::memory_order_relaxed);
            const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
            const double lr =
                std::max(floor, config.initial_learning_rate * (1.0 - (1.0 - 1e-4) * frac));

            const std::size_t lo = t >= static_cast<std::size_t>(config.window)
                                       ? t - static_cast<std::size_t>(config.window)
                                       : 0;
            const std::size_t hi =
                std::min(seq.size(), t + static_cast<std::size_t>(config.window) + 1);
            if (hi - lo <= 1) continue; // no context at all

            double loss = 0.0;
            int n_examples = 0;
            if (config.architecture == Architecture::Cbow) {
                ex.inputs.clear();
                for (std::size_t c = lo; c < hi; ++c) {
                    if (c != t) ex.inputs.push_back(seq[c]);
                }
                if (ex.inputs.empty()) continue;
                ex.target = seq[t];
                if (config.objective == Objective::NegativeSampling) draw_negatives(ex.target);
                loss += apply_example(input, output, ex, config.objective, tree, lr);
                ++n_examples;
            } else {
                for (std::size_t c = lo; c < hi; ++c) {
                    if (c == t) continue;
                    ex.inputs.assign(1, seq[t]);
                    ex.target = seq[c];
                    if (config.objective == Objective::NegativeSampling) draw_negatives(ex.target);
                    loss += apply_example(input, output, ex, config.objective, tree, lr);
                    ++n_examples;
                }
            }
            if (!std::isfinite(loss)) {
                throw numeric_error("non-finite training loss at epoch " + std::to_string(epoch) +
                                    ", report " + std::to_string(r) + ", position " +
                                    std::to_string(t));
            }
            acc.sum += loss;
            acc.examples += n_examples;
        }
    }
}

} // namespace detail

// Trains word vectors over the corpus. With threads=1 the result is a pure
// function of (corpus, vocab, config). With threads>1 workers update the
// shared matrices without synchronization, so only statistical
// reproducibility holds.
inline EmbeddingModel train(const std::vector<std::vector<std::string>>& corpus,
                            const Vocabulary& vocab, const TrainConfig& config) {
    config.validate();
    if (vocab.size() < 2) throw validation_error("train: vocabulary must have at least two words");

    std::vector<std::vector<std::uint32_t>> seqs;
    seqs.reserve(corpus.size());
    long long total_tokens = 0;
    {
        std::optional<Rng> subsample_rng;
        if (config.subsample > 0.0) subsample_rng.emplace(derive_seed(config.seed, 0x53554253ull));
        long long corpus_tokens = 0;
        for (const auto& report : corpus) {
            for (const auto& t : report) {
                if (vocab.lookup(t)) ++corpus_tokens;
            }
        }
        for (const auto& report : corpus) {
            std::vector<std::uint32_t> seq;
            seq.reserve(report.size());
            for (const auto& t : report) {
                const auto idx = vocab.lookup(t);
                if (!idx) continue;
                if (subsample_rng) {
                    const double freq = static_cast<double>(vocab.counts[*idx]) /
                                        static_cast<double>(corpus_tokens);
                    const double keep = std::sqrt(config.subsample / freq) +
                                        config.subsample / freq;
                    if (keep < 1.0 && subsample_rng->next_double() > keep) continue;
                }
                seq.push_back(*idx);
            }
            total_tokens += static_cast<long long>(seq.size());
            seqs.push_back(std::move(seq));
        }
    }
    if (total_tokens == 0) {
        throw validation_error("train: corpus has no in-vocabulary tokens");
    }

    EmbeddingModel model;
    model.vocab = vocab;
    model.config = config;
    const std::size_t v = vocab.size();
    const std::size_t d = static_cast<std::size_t>(config.dim);
    model.input_vectors = Matrix(v, d);
    model.output_vectors = Matrix(v, d, 0.0);
    {
        Rng init_rng(derive_seed(config.seed, 0x494e4954ull));
        const double bound = 0.5 / static_cast<double>(d);
        for (auto& x : model.input_vectors.data) x = init_rng.next_range(-bound, bound);
    }

    std::optional<AliasTable> sampler;
    std::optional<HuffmanTree> tree;
    if (config.objective == Objective::NegativeSampling) {
        sampler.emplace(make_negative_sampler(vocab.counts));
    } else {
        tree.emplace(build_huffman(vocab.counts));
    }

    const long long total_steps = total_tokens * config.epochs;
    std::atomic<long long> processed{0};
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        detail::EpochLossAccumulator total_acc;
        if (config.threads == 1) {
            detail::train_range(model.input_vectors, model.output_vectors, seqs, 0, seqs.size(),
                                config, sampler ? &*sampler : nullptr, tree ? &*tree : nullptr,
                                total_steps, processed,
                                derive_seed(config.seed, 0x454e4700ull + epoch), epoch, total_acc);
        } else {
            const std::size_t n_threads = static_cast<std::size_t>(config.threads);
            std::vector<detail::EpochLossAccumulator> accs(n_threads);
            std::vector<std::thread> workers;
            std::vector<std::exception_ptr> errors(n_threads);
            const std::size_t chunk = (seqs.size() + n_threads - 1) / n_threads;
            for (std::size_t w = 0; w < n_threads; ++w) {
                const std::size_t begin = std::min(seqs.size(), w * chunk);
                const std::size_t end = std::min(seqs.size(), begin + chunk);
                workers.emplace_back([&, w, begin, end]() {
                    try {
                        detail::train_range(
                            model.input_vectors, model.output_vectors, seqs, begin, end, config,
                            sampler ? &*sampler : nullptr, tree ? &*tree : nullptr, total_steps,
                            processed, derive_seed(config.seed, 0x454e4700ull + epoch * 1000 + w),
                            epoch, accs[w]);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : workers) t.join();
            for (const auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
            for (const auto& a : accs) {
                total_acc.sum += a.sum;
                total_acc.examples += a.examples;
            }
        }
        model.epoch_mean_loss.push_back(
            total_acc.examples > 0 ? total_acc.sum / static_cast<double>(total_acc.examples) : 0.0);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Similarity and document vectors

inline double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw validation_error("cosine: zero vector");
    return dot(a, b) / (na * nb);
}

// Top-k nearest vocabulary words by cosine over input vectors, query word
// excluded. Out-of-vocabulary queries are an error; they are never mapped to
// a random vector.
inline std::vector<std::pair<std::string, double>> most_similar(const EmbeddingModel& model,
                                                                const std::string& word,
                                                                std::size_t k) {
    if (k < 1) throw validation_error("most_similar: k must be >= 1");
    const auto q = model.vocab.lookup(word);
    if (!q) throw validation_error("word '" + word + "' not in vocabulary");
    const auto query = model.input_vectors.row(*q);
    std::vector<std::pair<double, std::uint32_t>> scored;
    scored.reserve(model.vocab.size() - 1);
    for (std::uint32_t i = 0; i < model.vocab.size(); ++i) {
        if (i == *q) continue;
        scored.emplace_back(cosine(query, model.input_vectors.row(i)), i);
    }
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    std::vector<std::pair<std::string, double>> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.emplace_back(model.vocab.words[scored[i].second], scored[i].first);
    }
    return out;
}

// Mean of the input vectors of in-vocabulary tokens. Out-of-vocabulary tokens
// are skipped; a report with none left is a degenerate document.
inline DocumentVector embed_document(const EmbeddingModel& model, const std::string& id,
                                     const std::vector<std::string>& tokens) {
    DocumentVector doc;
    doc.id = id;
    doc.vector.assign(model.input_vectors.cols, 0.0);
    for (const auto& t : tokens) {
        const auto idx = model.vocab.lookup(t);
        if (!idx) continue;
        const auto row = model.input_vectors.row(*idx);
        for (std::size_t i = 0; i < doc.vector.size(); ++i) doc.vector[i] += row[i];
        ++doc.n_known;
    }
    if (doc.n_known == 0) {
        throw validation_error("document '" + id + "' has no in-vocabulary tokens");
    }
    const double inv = 1.0 / static_cast<double>(doc.n_known);
    for (auto& x : doc.vector) x *= inv;
    return doc;
}

// ---------------------------------------------------------------------------
// Model I/O
//
// Text format: header "V d", then one "word v1 ... vd" line per word with
// 6-decimal fixed notation. Binary format: magic RVECEM01, sizes, length-
// prefixed words, raw doubles.

inline std::pair<std::size_t, std::size_t> parse_model_header(const std::string& line) {
    std::size_t v = 0, d = 0;
    char extra;
    std::istringstream in(line);
    if (!(in >> v >> d) || (in >> extra)) {
        throw parse_error("bad model header '" + line + "', expected 'V d'");
    }
    if (v == 0 || d == 0) throw parse_error("model header must have positive dimensions");
    return {v, d};
}

inline void save_model(const EmbeddingModel& model, const std::string& path, bool binary = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    const std::size_t v = model.vocab.size();
    const std::size_t d = model.input_vectors.cols;
    if (binary) {
        const char magic[8] = {'R', 'V', 'E', 'C', 'E', 'M', '0', '1'};
        out.write(magic, 8);
        const std::uint64_t v64 = v, d64 = d;
        out.write(reinterpret_cast<const char*>(&v64), 8);
        out.write(reinterpret_cast<const char*>(&d64), 8);
        for (std::size_t i = 0; i < v; ++i) {
            const auto& w = model.vocab.words[i];
            const std::uint32_t len = static_cast<std::uint32_t>(w.size());
            out.write(reinterpret_cast<const char*>(&len), 4);
            out.write(w.data(), len);
            out.write(reinterpret_cast<const char*>(model.input_vectors.row(i).data()),
                      static_cast<std::streamsize>(d * sizeof(double)));
        }
    } else {
        out << v << ' ' << d << '\n';
        char buf[32];
        for (std::size_t i = 0; i < v; ++i) {
            out << model.vocab.words[i];
            const auto row = model.input_vectors.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                std::snprintf(buf, sizeof(buf), " %.6f", row[j]);
                out << buf;
            }
            out << '\n';
        }
    }
    if (!out) throw io_error("write failed for " + path);
}

inline EmbeddingModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    EmbeddingModel model;

    char magic[8] = {};
    in.read(magic, 8);
    if (in.gcount() == 8 && std::memcmp(magic, "RVECEM01", 8) == 0) {
        std::uint64_t v = 0, d = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        in.read(reinterpret_cast<char*>(&d), 8);
        if (!in || v == 0 || d == 0) throw parse_error(path + ": bad binary model header");
        model.input_vectors = Matrix(v, d);
        model.vocab.words.resize(v);
        for (std::size_t i = 0; i < v; ++i) {
            std::uint32_t len = 0;
            in.read(reinterpret_cast<char*>(&len), 4);
            if (!in || len > (1u << 20)) throw parse_error(path + ": truncated binary model");
            std::string w(len, '\0');
            in.read(w.data(), len);
            in.read(reinterpret_cast<char*>(model.input_vectors.row(i).data()),
                    static_cast<std::streamsize>(d * sizeof(double)));
            if (!in) throw parse_error(path + ": truncated binary model");
            model.vocab.words[i] = std::move(w);
        }
    } else {
        in.clear();
        in.seekg(0);
        std::string line;
        if (!std::getline(in, line)) throw parse_error(path + ": empty model file");
        const auto [v, d] = parse_model_header(line);
        model.input_vectors = Matrix(v, d);
        model.vocab.words.resize(v);
        for (std::size_t i = 0; i < v; ++i) {
            if (!std::getline(in, line)) {
                throw parse_error(path + ": truncated model, expected " + std::to_string(v) +
                                  " word lines");
            }
            std::istringstream ls(line);
            std::string w;
            if (!(ls >> w)) throw parse_error(path + ": blank word line " + std::to_string(i + 2));
            auto row = model.input_vectors.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                if (!(ls >> row[j])) {
                    throw parse_error(path + ":" + std::to_string(i + 2) + ": expected " +
                                      std::to_string(d) + " components");
                }
            }
            double extra;
            if (ls >> extra) {
                throw parse_error(path + ":" + std::to_string(i + 2) + ": dimension mismatch");
            }
            model.vocab.words[i] = std::move(w);
        }
    }

    model.vocab.counts.assign(model.vocab.size(), 0);
    for (std::uint32_t i = 0; i < model.vocab.size(); ++i) {
        if (!model.vocab.index.emplace(model.vocab.words[i], i).second) {
            throw parse_error(path + ": duplicate word '" + model.vocab.words[i] + "'");
        }
    }
    model.output_vectors = Matrix(model.vocab.size(), model.input_vectors.cols, 0.0);
    model.config.dim = static_cast<int>(model.input_vectors.cols);
    return model;
}

} // namespace rvec
