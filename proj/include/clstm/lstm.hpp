#pragma once

#include <cmath>
#include <vector>

#include "clstm/matrix.hpp"
#include "clstm/rng.hpp"

namespace clstm {

// Gate weights act on the concatenation [h_{t-1}, x_t].
template <typename T>
struct LstmParams {
    Matrix<T> W_i, W_f, W_q, W_o;  // (d_mem, d_mem + d_in) each
    Matrix<T> b_i, b_f, b_q, b_o;  // (1, d_mem) each

    std::size_t d_mem() const { return W_i.rows; }
    std::size_t d_in() const { return W_i.cols - W_i.rows; }
};

// Weights uniform in [-s, s]; forget-gate bias starts at 1 so the cell path
// carries signal from the first epochs on, the other biases at 0.
template <typename T>
LstmParams<T> init_lstm(std::size_t d_mem, std::size_t d_in, Rng& rng) {
    if (d_mem < 1 || d_in < 1) throw ArgumentError("init_lstm: dimensions must be >= 1");
    double s = std::sqrt(6.0 / (2.0 * static_cast<double>(d_mem) + static_cast<double>(d_in)));
    LstmParams<T> p;
    p.W_i = rng_uniform<T>(rng, -s, s, d_mem, d_mem + d_in);
    p.W_f = rng_uniform<T>(rng, -s, s, d_mem, d_mem + d_in);
    p.W_q = rng_uniform<T>(rng, -s, s, d_mem, d_mem + d_in);
    p.W_o = rng_uniform<T>(rng, -s, s, d_mem, d_mem + d_in);
    p.b_i = Matrix<T>(1, d_mem);
    p.b_f = Matrix<T>(1, d_mem, T(1));
    p.b_q = Matrix<T>(1, d_mem);
    p.b_o = Matrix<T>(1, d_mem);
    return p;
}

// Per-step activations kept for backpropagation through time.
template <typename T>
struct LstmStepCache {
    Matrix<T> a;  // (1, d_mem + d_in): [h_{t-1}, x_t]
    Matrix<T> i, f, q, o;
    Matrix<T> c;       // cell state after the step
    Matrix<T> c_prev;  // cell state before the step
    Matrix<T> h;       // hidden state after the step
};

template <typename T>
struct LstmCache {
    std::vector<LstmStepCache<T>> steps;
};

template <typename T>
struct LstmStepOut {
    Matrix<T> h, c;  // (1, d_mem)
    LstmStepCache<T> cache;
};

// One transition:
//   i = sigmoid(W_i [h,x] + b_i), f,o analogous, q = tanh(W_q [h,x] + b_q)
//   c_t = f (*) c_{t-1} + i (*) q,  h_t = o (*) tanh(c_t)
template <typename T>
LstmStepOut<T> lstm_step(const Matrix<T>& x_t, const Matrix<T>& h_prev, const Matrix<T>& c_prev,
                         const LstmParams<T>& params) {
    std::size_t d_mem = params.d_mem();
    std::size_t d_in = params.d_in();
    if (x_t.rows != 1 || x_t.cols != d_in)
        throw ShapeError("lstm_step: x_t " + x_t.shape_str() + ", expected (1," + std::to_string(d_in) + ")");
    if (h_prev.rows != 1 || h_prev.cols != d_mem || c_prev.rows != 1 || c_prev.cols != d_mem)
        throw ShapeError("lstm_step: state shapes " + h_prev.shape_str() + "/" + c_prev.shape_str() +
                         ", expected (1," + std::to_string(d_mem) + ")");

    LstmStepOut<T> out;
    out.cache.a = Matrix<T>(1, d_mem + d_in);
    std::copy(h_prev.data.begin(), h_prev.data.end(), out.cache.a.data.begin());
    std::copy(x_t.data.begin(), x_t.data.end(), out.cache.a.data.begin() + static_cast<std::ptrdiff_t>(d_mem));

    auto gate = [&](const Matrix<T>& w, const Matrix<T>& b) {
        Matrix<T> z = matmul_tb(out.cache.a, w);
        axpy(z, T(1), b);
        return z;
    };
    out.cache.i = sigmoid(gate(params.W_i, params.b_i));
    out.cache.f = sigmoid(gate(params.W_f, params.b_f));
    out.cache.q = tanh_m(gate(params.W_q, params.b_q));
    out.cache.o = sigmoid(gate(params.W_o, params.b_o));

    out.c = Matrix<T>(1, d_mem);
    for (std::size_t j = 0; j < d_mem; ++j)
        out.c(0, j) = out.cache.f(0, j) * c_prev(0, j) + out.cache.i(0, j) * out.cache.q(0, j);
    out.h = Matrix<T>(1, d_mem);
    for (std::size_t j = 0; j < d_mem; ++j) out.h(0, j) = out.cache.o(0, j) * std::tanh(out.c(0, j));

    out.cache.c = out.c;
    out.cache.c_prev = c_prev;
    out.cache.h = out.h;
    return out;
}

template <typename T>
struct LstmForwardOut {
    Matrix<T> h_all;  // (T, d_mem); the sentence representation is the last row
    LstmCache<T> cache;
};

// Runs the transition over every row of X with h_0 = c_0 = 0.
template <typename T>
LstmForwardOut<T> lstm_forward(const Matrix<T>& x, const LstmParams<T>& params) {
    if (x.rows == 0) throw ArgumentError("lstm_forward: empty input sequence");
    std::size_t d_mem = params.d_mem();
    LstmForwardOut<T> out;
    out.h_all = Matrix<T>(x.rows, d_mem);
    out.cache.steps.reserve(x.rows);

    Matrix<T> h(1, d_mem), c(1, d_mem);
    for (std::size_t t = 0; t < x.rows; ++t) {
        Matrix<T> x_t(1, x.cols);
        std::copy(x.row_ptr(t), x.row_ptr(t) + x.cols, x_t.data.begin());
        LstmStepOut<T> step = lstm_step(x_t, h, c, params);
        h = step.h;
        c = step.c;
        std::copy(h.data.begin(), h.data.end(), out.h_all.row_ptr(t));
        out.cache.steps.push_back(std::move(step.cache));
    }
    return out;
}

// Parameter gradients share the LstmParams layout.
template <typename T>
struct LstmGrads {
    LstmParams<T> params;
    Matrix<T> x;  // (T, d_in)
};

// Exact reverse accumulation through all T steps, including the cell
// recurrence path. `upstream` carries dLoss/dh_t per row (typically nonzero
// only at the last row).
template <typename T>
LstmGrads<T> lstm_backward(const Matrix<T>& upstream, const LstmCache<T>& cache, const LstmParams<T>& params) {
    std::size_t steps = cache.steps.size();
    std::size_t d_mem = params.d_mem();
    std::size_t d_in = params.d_in();
    if (upstream.rows != steps || upstream.cols != d_mem)
        throw ShapeError("lstm_backward: upstream " + upstream.shape_str() + ", expected (" + std::to_string(steps) +
                         "," + std::to_string(d_mem) + ")");

    LstmGrads<T> g;
    g.params.W_i = Matrix<T>(d_mem, d_mem + d_in);
    g.params.W_f = Matrix<T>(d_mem, d_mem + d_in);
    g.params.W_q = Matrix<T>(d_mem, d_mem + d_in);
    g.params.W_o = Matrix<T>(d_mem, d_mem + d_in);
    g.params.b_i = Matrix<T>(1, d_mem);
    g.params.b_f = Matrix<T>(1, d_mem);
    g.params.b_q = Matrix<T>(1, d_mem);
    g.params.b_o = Matrix<T>(1, d_mem);
    g.x = Matrix<T>(steps, d_in);

    Matrix<T> dh_next(1, d_mem), dc_next(1, d_mem);
    Matrix<T> dzi(1, d_mem), dzf(1, d_mem), dzq(1, d_mem), dzo(1, d_mem), dc(1, d_mem);

    for (std::size_t t = steps; t-- > 0;) {
        const LstmStepCache<T>& s = cache.steps[t];
        for (std::size_t j = 0; j < d_mem; ++j) {
            T dh = upstream(t, j) + dh_next(0, j);
            T tc = std::tanh(s.c(0, j));
            T o = s.o(0, j);
            dzo(0, j) = dh * tc * o * (T(1) - o);
            dc(0, j) = dh * o * (T(1) - tc * tc) + dc_next(0, j);
            T f = s.f(0, j);
            dzf(0, j) = dc(0, j) * s.c_prev(0, j) * f * (T(1) - f);
            T i = s.i(0, j);
            dzi(0, j) = dc(0, j) * s.q(0, j) * i * (T(1) - i);
            T q = s.q(0, j);
            dzq(0, j) = dc(0, j) * i * (T(1) - q * q);
            dc_next(0, j) = dc(0, j) * f;
        }

        // Parameter gradients: dz^T (x) a, plus bias rows.
        for (std::size_t j = 0; j < d_mem; ++j) {
            const T* a = s.a.row_ptr(0);
            T vi = dzi(0, j), vf = dzf(0, j), vq = dzq(0, j), vo = dzo(0, j);
            T* wi = g.params.W_i.row_ptr(j);
            T* wf = g.params.W_f.row_ptr(j);
            T* wq = g.params.W_q.row_ptr(j);
            T* wo = g.params.W_o.row_ptr(j);
            for (std::size_t m = 0; m < d_mem + d_in; ++m) {
                wi[m] += vi * a[m];
                wf[m] += vf * a[m];
                wq[m] += vq * a[m];
                wo[m] += vo * a[m];
            }
            g.params.b_i(0, j) += vi;
            g.params.b_f(0, j) += vf;
            g.params.b_q(0, j) += vq;
            g.params.b_o(0, j) += vo;
        }

        // da = sum_g W_g^T dz_g, split into dh_{t-1} and dx_t.
        Matrix<T> da = matmul(dzi, params.W_i);
        axpy(da, T(1), matmul(dzf, params.W_f));
        axpy(da, T(1), matmul(dzq, params.W_q));
        axpy(da, T(1), matmul(dzo, params.W_o));
        for (std::size_t j = 0; j < d_mem; ++j) dh_next(0, j) = da(0, j);
        for (std::size_t j = 0; j < d_in; ++j) g.x(t, j) = da(0, d_mem + j);
    }
    return g;
}

}  // namespace clstm
