#pragma once

#include <cmath>

#include "clstm/matrix.hpp"
#include "clstm/rng.hpp"

namespace clstm {

template <typename T>
struct SoftmaxParams {
    Matrix<T> W;  // (num_classes, d_mem)
    Matrix<T> b;  // (1, num_classes)

    std::size_t num_classes() const { return W.rows; }
};

template <typename T>
SoftmaxParams<T> init_head(std::size_t num_classes, std::size_t d_mem, Rng& rng) {
    if (num_classes < 2 || d_mem < 1) throw ArgumentError("init_head: need >= 2 classes and d_mem >= 1");
    double s = std::sqrt(6.0 / (static_cast<double>(num_classes) + static_cast<double>(d_mem)));
    SoftmaxParams<T> p;
    p.W = rng_uniform<T>(rng, -s, s, num_classes, d_mem);
    p.b = Matrix<T>(1, num_classes);
    return p;
}

// probabilities = softmax(W h + b)
template <typename T>
Matrix<T> head_forward(const Matrix<T>& h, const SoftmaxParams<T>& params) {
    if (h.rows != 1 || h.cols != params.W.cols)
        throw ShapeError("head_forward: h " + h.shape_str() + ", expected (1," + std::to_string(params.W.cols) + ")");
    Matrix<T> logits = matmul_tb(h, params.W);
    axpy(logits, T(1), params.b);
    return softmax_rows(logits);
}

// Negative log-likelihood with the probability floored at 1e-12 before the
// log so single-precision near-zero probabilities cannot produce -inf.
template <typename T>
T cross_entropy(const Matrix<T>& probs, int y) {
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols)
        throw ArgumentError("cross_entropy: label " + std::to_string(y) + " outside " + std::to_string(probs.cols) +
                            " classes");
    T p = probs(0, static_cast<std::size_t>(y));
    return -std::log(std::max(p, T(1e-12)));
}

template <typename T>
struct HeadGrads {
    Matrix<T> W;  // (num_classes, d_mem)
    Matrix<T> b;  // (1, num_classes)
    Matrix<T> h;  // (1, d_mem)
};

// grad_logits = probs - onehot(y); the L2 term 2*lambda*W lands on grad_W
// when lambda > 0.
template <typename T>
HeadGrads<T> head_backward(const Matrix<T>& probs, int y, const Matrix<T>& h, const SoftmaxParams<T>& params,
                           T lambda = T(0)) {
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols)
        throw ArgumentError("head_backward: label " + std::to_string(y) + " outside " + std::to_string(probs.cols) +
                            " classes");
    if (h.rows != 1 || h.cols != params.W.cols)
        throw ShapeError("head_backward: h " + h.shape_str() + " vs W " + params.W.shape_str());

    Matrix<T> dlogits = probs;
    dlogits(0, static_cast<std::size_t>(y)) -= T(1);

    HeadGrads<T> g;
    g.W = matmul_ta(dlogits, h);  // (k,1)^T x (1,d) -> (k,d)
    if (lambda > T(0)) axpy(g.W, T(2) * lambda, params.W);
    g.b = dlogits;
    g.h = matmul(dlogits, params.W);
    return g;
}

// lambda * sum of squared softmax weights; the bias is not penalized.
template <typename T>
T l2_penalty(const SoftmaxParams<T>& params, T lambda) {
    if (lambda < T(0)) throw ArgumentError("l2_penalty: lambda must be >= 0");
    return lambda * sum_squares(params.W);
}

}  // namespace clstm
