#pragma once

#include "clstm/config.hpp"
#include "clstm/model_params.hpp"

namespace clstm {

enum class Mode { train, eval };

template <typename T>
struct DropoutResult {
    Matrix<T> out;
    Matrix<T> mask;  // entries 0 or 1/(1-p); multiplying by it replays the drop
};

// Inverted dropout: entries zeroed with probability p, survivors scaled by
// 1/(1-p), so evaluation is a plain forward pass.
template <typename T>
DropoutResult<T> dropout(const Matrix<T>& x, double p, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw ArgumentError("dropout: p must lie in [0, 1)");
    DropoutResult<T> r;
    r.mask = Matrix<T>(x.rows, x.cols);
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (auto& m : r.mask.data) m = rng.next_double() < p ? T(0) : keep_scale;
    r.out = hadamard(x, r.mask);
    return r;
}

// Pre-drawn masks so the gradient checker can replay one fixed drop pattern
// across repeated forward passes. Empty matrices mean "site not dropped".
template <typename T>
struct FrozenMasks {
    Matrix<T> words;     // (maxlen, d)
    Matrix<T> lstm_out;  // (1, d_mem)
};

template <typename T>
struct ForwardCache {
    std::vector<int> ids;
    std::size_t true_length = 0;
    Matrix<T> x_embedded;  // (maxlen, d)
    Matrix<T> word_mask;   // empty when word dropout off
    Matrix<T> x_in;        // conv input after word dropout
    MultiBankOut<T> conv;
    LstmForwardOut<T> lstm;
    std::size_t read_row = 0;  // row of h_all used as the sentence representation
    Matrix<T> h_read;          // (1, d_mem) before output dropout
    Matrix<T> lstm_mask;       // empty when output dropout off
    Matrix<T> h_in;            // head input
    Matrix<T> probs;           // (1, num_classes)
};

// Which window row represents the sentence: the last one by default, or the
// last window fully inside the unpadded tokens when read_at_true_length is
// on (clamped to a valid row).
inline std::size_t representation_row(std::size_t window_rows, std::size_t true_length, std::size_t k_max,
                                      bool read_at_true_length) {
    if (!read_at_true_length) return window_rows - 1;
    std::size_t row = true_length > k_max ? true_length - k_max : 0;
    return std::min(row, window_rows - 1);
}

// embed -> (word dropout) -> parallel conv banks -> LSTM -> read row ->
// (output dropout) -> softmax head. Dropout only runs in train mode; with
// dropout_p = 0 train and eval forward agree bit-exactly.
template <typename T>
ForwardCache<T> forward(const Example& ex, const ModelParams<T>& params, const ModelConfig& config, Mode mode,
                        Rng* rng, const FrozenMasks<T>* frozen = nullptr) {
    ForwardCache<T> cache;
    cache.ids = ex.ids;
    cache.true_length = ex.true_length;
    cache.x_embedded = embed_forward(ex.ids, params.emb);

    bool do_drop = mode == Mode::train && config.dropout_p > 0.0;
    bool drop_words = do_drop && config.dropout_sites.count(DropSite::word_vectors);
    bool drop_out = do_drop && config.dropout_sites.count(DropSite::lstm_output);
    if ((drop_words || drop_out) && rng == nullptr && frozen == nullptr)
        throw ArgumentError("forward: train-mode dropout needs an rng or frozen masks");

    if (drop_words) {
        if (frozen) {
            cache.word_mask = frozen->words;
            cache.x_in = hadamard(cache.x_embedded, cache.word_mask);
        } else {
            DropoutResult<T> d = dropout(cache.x_embedded, config.dropout_p, *rng);
            cache.word_mask = std::move(d.mask);
            cache.x_in = std::move(d.out);
        }
    } else {
        cache.x_in = cache.x_embedded;
    }

    cache.conv = multi_bank_forward(cache.x_in, params.banks);
    cache.lstm = lstm_forward(cache.conv.features, params.lstm);

    cache.read_row =
        representation_row(cache.lstm.h_all.rows, ex.true_length, config.k_max(), config.read_at_true_length);
    cache.h_read = Matrix<T>(1, params.lstm.d_mem());
    std::copy(cache.lstm.h_all.row_ptr(cache.read_row), cache.lstm.h_all.row_ptr(cache.read_row) + params.lstm.d_mem(),
              cache.h_read.data.begin());

    if (drop_out) {
        if (frozen) {
            cache.lstm_mask = frozen->lstm_out;
            cache.h_in = hadamard(cache.h_read, cache.lstm_mask);
        } else {
            DropoutResult<T> d = dropout(cache.h_read, config.dropout_p, *rng);
            cache.lstm_mask = std::move(d.mask);
            cache.h_in = std::move(d.out);
        }
    } else {
        cache.h_in = cache.h_read;
    }

    cache.probs = head_forward(cache.h_in, params.head);
    return cache;
}

// Exact gradient of (cross-entropy + L2) for one example; dropout masks are
// replayed from the cache. With frozen embeddings no embedding gradient is
// emitted.
template <typename T>
ModelGrads<T> backward(const ForwardCache<T>& cache, int y, const ModelParams<T>& params, const ModelConfig& config) {
    ModelGrads<T> g;  // every field is filled below

    HeadGrads<T> hg = head_backward(cache.probs, y, cache.h_in, params.head, static_cast<T>(config.l2_lambda));
    g.head_W = std::move(hg.W);
    g.head_b = std::move(hg.b);

    Matrix<T> dh = std::move(hg.h);
    if (cache.lstm_mask.size() > 0) dh = hadamard(dh, cache.lstm_mask);

    Matrix<T> upstream(cache.lstm.h_all.rows, cache.lstm.h_all.cols);
    std::copy(dh.data.begin(), dh.data.end(), upstream.row_ptr(cache.read_row));

    LstmGrads<T> lg = lstm_backward(upstream, cache.lstm.cache, params.lstm);
    g.lstm = std::move(lg.params);

    MultiBankGrads<T> cg = multi_bank_backward(lg.x, params.banks, cache.conv.caches);
    g.bank_weights = std::move(cg.weights);
    g.bank_biases = std::move(cg.biases);

    Matrix<T> dx = std::move(cg.x);
    if (cache.word_mask.size() > 0) dx = hadamard(dx, cache.word_mask);
    if (params.emb.trainable) g.embedding = embed_backward(cache.ids, dx);
    return g;
}

}  // namespace clstm
