#pragma once

#include <map>
#include <string>
#include <vector>

#include "clstm/matrix.hpp"
#include "clstm/rng.hpp"
#include "clstm/text_data.hpp"

namespace clstm {

// Reads a word2vec binary file: ASCII header "<count> <dim>\n", then per word
// the token bytes terminated by a single 0x20, dim little-endian float32
// values, and an optional trailing '\n' (tolerated present or absent).
// Returns vectors only for tokens present in the vocab (file tokens are
// lowercased for the membership test; the first occurrence wins).
std::map<std::string, std::vector<float>> read_word2vec_binary(const std::string& path, const Vocab& vocab);

// Writes the same layout (with the trailing '\n'); used for fixtures and the
// round-trip tests.
void write_word2vec_binary(const std::string& path,
                           const std::vector<std::pair<std::string, std::vector<float>>>& entries);

// Plain-text alternative, one "token v1 v2 ... vd" per line.
std::map<std::string, std::vector<float>> read_vectors_text(const std::string& path, const Vocab& vocab);

// Trainable lookup table, one row per vocab entry (unk included).
template <typename T>
struct EmbeddingTable {
    Matrix<T> table;  // (|vocab|, d)
    bool trainable = true;

    std::size_t dim() const { return table.cols; }
};

template <typename T>
EmbeddingTable<T> init_table(const Vocab& vocab, const std::map<std::string, std::vector<float>>& pretrained,
                             std::size_t d, Rng& rng) {
    if (d == 0) throw ArgumentError("init_table: embedding dimension must be > 0");
    EmbeddingTable<T> emb;
    emb.table = Matrix<T>(vocab.size(), d);
    for (std::size_t id = 0; id < vocab.size(); ++id) {
        auto it = pretrained.find(vocab.id_to_token[id]);
        if (it != pretrained.end()) {
            if (it->second.size() != d)
                throw ArgumentError("init_table: pretrained vector for '" + vocab.id_to_token[id] + "' has length " +
                                    std::to_string(it->second.size()) + ", expected " + std::to_string(d));
            for (std::size_t j = 0; j < d; ++j) emb.table(id, j) = static_cast<T>(it->second[j]);
        } else {
            for (std::size_t j = 0; j < d; ++j) emb.table(id, j) = static_cast<T>(rng.uniform(-0.25, 0.25));
        }
    }
    return emb;
}

// Row t of the output is the table row for ids[t].
template <typename T>
Matrix<T> embed_forward(const std::vector<int>& ids, const EmbeddingTable<T>& emb) {
    Matrix<T> out(ids.size(), emb.dim());
    for (std::size_t t = 0; t < ids.size(); ++t) {
        int id = ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= emb.table.rows)
            throw IndexError("embed_forward: id " + std::to_string(id) + " outside table of " +
                             std::to_string(emb.table.rows) + " rows");
        const T* src = emb.table.row_ptr(static_cast<std::size_t>(id));
        std::copy(src, src + emb.dim(), out.row_ptr(t));
    }
    return out;
}

// Sparse per-row gradient for the embedding table. Ordered by row index so
// reductions and updates are deterministic.
template <typename T>
struct RowGrads {
    std::map<int, std::vector<T>> rows;

    void add_row(int id, const T* g, std::size_t d) {
        auto [it, inserted] = rows.try_emplace(id, d, T(0));
        std::vector<T>& acc = it->second;
        for (std::size_t j = 0; j < d; ++j) acc[j] += g[j];
    }

    void merge(const RowGrads& other) {
        for (const auto& [id, g] : other.rows) add_row(id, g.data(), g.size());
    }

    void scale(T alpha) {
        for (auto& [id, g] : rows)
            for (T& v : g) v *= alpha;
    }

    T sum_squares() const {
        T s = T(0);
        for (const auto& [id, g] : rows)
            for (T v : g) s += v * v;
        return s;
    }

    Matrix<T> to_dense(std::size_t vocab_size, std::size_t d) const {
        Matrix<T> out(vocab_size, d);
        for (const auto& [id, g] : rows)
            for (std::size_t j = 0; j < d; ++j) out(static_cast<std::size_t>(id), j) += g[j];
        return out;
    }
};

// Gradient row for table index v is the sum of upstream rows t with
// ids[t] == v; rows that never appear stay absent (zero).
template <typename T>
RowGrads<T> embed_backward(const std::vector<int>& ids, const Matrix<T>& upstream) {
    if (upstream.rows != ids.size())
        throw ShapeError("embed_backward: upstream rows " + std::to_string(upstream.rows) + " != ids length " +
                         std::to_string(ids.size()));
    RowGrads<T> g;
    for (std::size_t t = 0; t < ids.size(); ++t) g.add_row(ids[t], upstream.row_ptr(t), upstream.cols);
    return g;
}

}  // namespace clstm
