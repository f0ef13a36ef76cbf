#pragma once

#include <cmath>
#include <vector>

#include "clstm/matrix.hpp"
#include "clstm/rng.hpp"

namespace clstm {

struct BankSpec {
    std::size_t k = 3;  // filter length in words
    std::size_t n = 1;  // filter count
};

// One convolution filter bank: row i of `weights` is filter i flattened
// row-major over its k word slots.
template <typename T>
struct FilterBank {
    std::size_t k = 0;
    std::size_t n = 0;
    Matrix<T> weights;  // (n, k*d)
    Matrix<T> biases;   // (1, n)
};

template <typename T>
FilterBank<T> init_filter_bank(std::size_t k, std::size_t n, std::size_t d, Rng& rng) {
    if (k < 1 || n < 1) throw ArgumentError("init_filter_bank: k and n must be >= 1");
    FilterBank<T> bank;
    bank.k = k;
    bank.n = n;
    double s = std::sqrt(6.0 / (static_cast<double>(k * d) + static_cast<double>(n)));
    bank.weights = rng_uniform<T>(rng, -s, s, n, k * d);
    bank.biases = Matrix<T>(1, n);
    return bank;
}

// Bank filter lengths must be distinct, >= 1 and <= maxlen.
inline void validate_banks(const std::vector<BankSpec>& banks, std::size_t maxlen) {
    if (banks.empty()) throw ArgumentError("conv config: at least one filter bank required");
    for (std::size_t a = 0; a < banks.size(); ++a) {
        if (banks[a].k < 1 || banks[a].n < 1)
            throw ArgumentError("conv config: bank k and n must be >= 1");
        if (banks[a].k > maxlen)
            throw ArgumentError("conv config: filter length " + std::to_string(banks[a].k) +
                                " exceeds maxlen " + std::to_string(maxlen));
        for (std::size_t b = a + 1; b < banks.size(); ++b)
            if (banks[a].k == banks[b].k)
                throw ArgumentError("conv config: duplicate filter length " + std::to_string(banks[a].k));
    }
}

// Window j (1-based): the k consecutive word vectors starting at row j,
// concatenated into one row vector.
template <typename T>
Matrix<T> window(const Matrix<T>& x, std::size_t k, std::size_t j) {
    if (j < 1 || j + k - 1 > x.rows)
        throw IndexError("window: position " + std::to_string(j) + " with k=" + std::to_string(k) +
                         " outside sentence of length " + std::to_string(x.rows));
    Matrix<T> w(1, k * x.cols);
    for (std::size_t u = 0; u < k; ++u) {
        const T* src = x.row_ptr(j - 1 + u);
        std::copy(src, src + x.cols, w.row_ptr(0) + u * x.cols);
    }
    return w;
}

template <typename T>
struct ConvCache {
    Matrix<T> windows;  // (L-k+1, k*d)
    Matrix<T> pre_act;  // (L-k+1, n)
    std::size_t input_rows = 0;
    std::size_t input_cols = 0;
};

template <typename T>
struct ConvOut {
    Matrix<T> features;  // (L-k+1, n), ReLU applied, window order preserved
    ConvCache<T> cache;
};

// Valid 1-D convolution with ReLU. Entry (j,i) is
// relu(<window(x,k,j+1), filter_i> + bias_i); no pooling, so the row count is
// exactly L-k+1.
template <typename T>
ConvOut<T> conv_forward(const Matrix<T>& x, const FilterBank<T>& bank) {
    if (x.rows < bank.k)
        throw ArgumentError("conv_forward: input of length " + std::to_string(x.rows) +
                            " shorter than filter length " + std::to_string(bank.k));
    if (bank.weights.cols != bank.k * x.cols)
        throw ShapeError("conv_forward: filters expect k*d=" + std::to_string(bank.weights.cols) + ", input has k*d=" +
                         std::to_string(bank.k * x.cols));

    std::size_t p = x.rows - bank.k + 1;
    ConvOut<T> out;
    out.cache.input_rows = x.rows;
    out.cache.input_cols = x.cols;
    out.cache.windows = Matrix<T>(p, bank.k * x.cols);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t u = 0; u < bank.k; ++u) {
            const T* src = x.row_ptr(j + u);
            std::copy(src, src + x.cols, out.cache.windows.row_ptr(j) + u * x.cols);
        }
    }
    out.cache.pre_act = matmul_tb(out.cache.windows, bank.weights);
    add_row_inplace(out.cache.pre_act, bank.biases);
    out.features = relu(out.cache.pre_act);
    return out;
}

template <typename T>
struct ConvGrads {
    Matrix<T> weights;  // (n, k*d)
    Matrix<T> biases;   // (1, n)
    Matrix<T> x;        // (L, d), overlapping window contributions summed
};

// Exact gradients of conv_forward; the ReLU subgradient at 0 is 0.
template <typename T>
ConvGrads<T> conv_backward(const Matrix<T>& upstream, const FilterBank<T>& bank, const ConvCache<T>& cache) {
    if (!upstream.same_shape(cache.pre_act))
        throw ShapeError("conv_backward: upstream " + upstream.shape_str() + " vs forward output " +
                         cache.pre_act.shape_str());

    Matrix<T> dz(upstream.rows, upstream.cols);
    for (std::size_t i = 0; i < dz.size(); ++i)
        dz.data[i] = cache.pre_act.data[i] > T(0) ? upstream.data[i] : T(0);

    ConvGrads<T> g;
    g.weights = matmul_ta(dz, cache.windows);
    g.biases = col_sums(dz);
    Matrix<T> dwindows = matmul(dz, bank.weights);  // (p, k*d)

    std::size_t d = cache.input_cols;
    g.x = Matrix<T>(cache.input_rows, d);
    for (std::size_t j = 0; j < dwindows.rows; ++j) {
        for (std::size_t u = 0; u < bank.k; ++u) {
            T* dst = g.x.row_ptr(j + u);
            const T* src = dwindows.row_ptr(j) + u * d;
            for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
        }
    }
    return g;
}

template <typename T>
struct MultiBankOut {
    Matrix<T> features;  // (L-k_max+1, sum n_i)
    std::vector<ConvCache<T>> caches;
};

// Runs every bank, truncates each output to its first L-k_max+1 rows, and
// concatenates the per-window features left-to-right in bank order. Windows
// are aligned by start position.
template <typename T>
MultiBankOut<T> multi_bank_forward(const Matrix<T>& x, const std::vector<FilterBank<T>>& banks) {
    if (banks.empty()) throw ArgumentError("multi_bank_forward: no filter banks");
    std::size_t k_max = 0, n_total = 0;
    for (const auto& b : banks) {
        k_max = std::max(k_max, b.k);
        n_total += b.n;
    }
    if (x.rows < k_max)
        throw ArgumentError("conv_forward: input of length " + std::to_string(x.rows) +
                            " shorter than filter length " + std::to_string(k_max));

    std::size_t p = x.rows - k_max + 1;
    MultiBankOut<T> out;
    out.features = Matrix<T>(p, n_total);
    std::size_t col = 0;
    for (const auto& bank : banks) {
        ConvOut<T> one = conv_forward(x, bank);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t i = 0; i < bank.n; ++i) out.features(j, col + i) = one.features(j, i);
        out.caches.push_back(std::move(one.cache));
        col += bank.n;
    }
    return out;
}

template <typename T>
struct MultiBankGrads {
    std::vector<Matrix<T>> weights;
    std::vector<Matrix<T>> biases;
    Matrix<T> x;
};

template <typename T>
MultiBankGrads<T> multi_bank_backward(const Matrix<T>& upstream, const std::vector<FilterBank<T>>& banks,
                                      const std::vector<ConvCache<T>>& caches) {
    MultiBankGrads<T> g;
    g.x = Matrix<T>(caches.front().input_rows, caches.front().input_cols);
    std::size_t col = 0;
    for (std::size_t b = 0; b < banks.size(); ++b) {
        // Rows cut by the k_max truncation received no upstream signal.
        Matrix<T> up_b(caches[b].pre_act.rows, banks[b].n);
        for (std::size_t j = 0; j < upstream.rows; ++j)
            for (std::size_t i = 0; i < banks[b].n; ++i) up_b(j, i) = upstream(j, col + i);
        ConvGrads<T> gb = conv_backward(up_b, banks[b], caches[b]);
        axpy(g.x, T(1), gb.x);
        g.weights.push_back(std::move(gb.weights));
        g.biases.push_back(std::move(gb.biases));
        col += banks[b].n;
    }
    return g;
}

}  // namespace clstm
