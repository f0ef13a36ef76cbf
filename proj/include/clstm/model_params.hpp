#pragma once

#include <map>
#include <string>
#include <vector>

#include "clstm/config.hpp"
#include "clstm/conv.hpp"
#include "clstm/embeddings.hpp"
#include "clstm/head.hpp"
#include "clstm/lstm.hpp"

namespace clstm {

// All trainable state of one model.
template <typename T>
struct ModelParams {
    EmbeddingTable<T> emb;
    std::vector<FilterBank<T>> banks;
    LstmParams<T> lstm;
    SoftmaxParams<T> head;
};

// Draw order is fixed (embedding, banks, lstm, head) so a seed pins the
// whole initialization.
template <typename T>
ModelParams<T> init_params(const ModelConfig& config, const Vocab& vocab,
                           const std::map<std::string, std::vector<float>>& pretrained, Rng& rng) {
    validate_banks(config.banks, vocab.maxlen);
    if (config.num_classes < 2) throw ArgumentError("init_params: num_classes must be >= 2");

    ModelParams<T> p;
    p.emb = init_table<T>(vocab, pretrained, config.embedding_dim, rng);
    p.emb.trainable = config.trainable_embeddings;
    std::size_t n_total = 0;
    for (const BankSpec& spec : config.banks) {
        p.banks.push_back(init_filter_bank<T>(spec.k, spec.n, config.embedding_dim, rng));
        n_total += spec.n;
    }
    p.lstm = init_lstm<T>(config.d_mem, n_total, rng);
    p.head = init_head<T>(static_cast<std::size_t>(config.num_classes), config.d_mem, rng);
    return p;
}

// Visits every dense parameter block as (name, Matrix&), embedding first,
// in the canonical order shared by the optimizer state, the gradient checker
// and the checkpoint manifest.
template <typename T, typename P, typename F>
void visit_blocks(P& p, F&& f) {
    f("embedding", p.emb.table);
    for (auto& bank : p.banks) {
        std::string prefix = "conv.k" + std::to_string(bank.k);
        f(prefix + ".weights", bank.weights);
        f(prefix + ".biases", bank.biases);
    }
    f("lstm.W_i", p.lstm.W_i);
    f("lstm.W_f", p.lstm.W_f);
    f("lstm.W_q", p.lstm.W_q);
    f("lstm.W_o", p.lstm.W_o);
    f("lstm.b_i", p.lstm.b_i);
    f("lstm.b_f", p.lstm.b_f);
    f("lstm.b_q", p.lstm.b_q);
    f("lstm.b_o", p.lstm.b_o);
    f("head.W", p.head.W);
    f("head.b", p.head.b);
}

template <typename T, typename F>
void for_each_block(ModelParams<T>& p, F&& f) {
    visit_blocks<T, ModelParams<T>, F>(p, std::forward<F>(f));
}
template <typename T, typename F>
void for_each_block(const ModelParams<T>& p, F&& f) {
    visit_blocks<T, const ModelParams<T>, F>(p, std::forward<F>(f));
}

// Gradients for everything: dense blocks mirror the parameter shapes, the
// embedding gradient stays sparse by row.
template <typename T>
struct ModelGrads {
    RowGrads<T> embedding;
    std::vector<Matrix<T>> bank_weights;
    std::vector<Matrix<T>> bank_biases;
    LstmParams<T> lstm;
    Matrix<T> head_W;
    Matrix<T> head_b;

    template <typename F>
    void for_each_dense(F&& f) {
        for (std::size_t b = 0; b < bank_weights.size(); ++b) {
            f(bank_weights[b]);
            f(bank_biases[b]);
        }
        f(lstm.W_i);
        f(lstm.W_f);
        f(lstm.W_q);
        f(lstm.W_o);
        f(lstm.b_i);
        f(lstm.b_f);
        f(lstm.b_q);
        f(lstm.b_o);
        f(head_W);
        f(head_b);
    }

    template <typename F>
    void for_each_dense(F&& f) const {
        const_cast<ModelGrads*>(this)->for_each_dense([&](Matrix<T>& m) { f(static_cast<const Matrix<T>&>(m)); });
    }

    void add_scaled(const ModelGrads& other, T alpha) {
        RowGrads<T> scaled = other.embedding;
        scaled.scale(alpha);
        embedding.merge(scaled);
        std::size_t i = 0;
        std::vector<const Matrix<T>*> theirs;
        other.for_each_dense([&](const Matrix<T>& m) { theirs.push_back(&m); });
        for_each_dense([&](Matrix<T>& m) { axpy(m, alpha, *theirs[i++]); });
    }

    void scale(T alpha) {
        embedding.scale(alpha);
        for_each_dense([&](Matrix<T>& m) { scale_inplace(m, alpha); });
    }

    T sum_squares() const {
        T s = embedding.sum_squares();
        for_each_dense([&](const Matrix<T>& m) { s += clstm::sum_squares(m); });
        return s;
    }
};

// Zero gradients shaped like the given parameters.
template <typename T>
ModelGrads<T> zero_grads(const ModelParams<T>& p) {
    ModelGrads<T> g;
    for (const auto& bank : p.banks) {
        g.bank_weights.emplace_back(bank.weights.rows, bank.weights.cols);
        g.bank_biases.emplace_back(bank.biases.rows, bank.biases.cols);
    }
    std::size_t d_mem = p.lstm.d_mem(), width = d_mem + p.lstm.d_in();
    g.lstm.W_i = Matrix<T>(d_mem, width);
    g.lstm.W_f = Matrix<T>(d_mem, width);
    g.lstm.W_q = Matrix<T>(d_mem, width);
    g.lstm.W_o = Matrix<T>(d_mem, width);
    g.lstm.b_i = Matrix<T>(1, d_mem);
    g.lstm.b_f = Matrix<T>(1, d_mem);
    g.lstm.b_q = Matrix<T>(1, d_mem);
    g.lstm.b_o = Matrix<T>(1, d_mem);
    g.head_W = Matrix<T>(p.head.W.rows, p.head.W.cols);
    g.head_b = Matrix<T>(1, p.head.b.cols);
    return g;
}

}  // namespace clstm
