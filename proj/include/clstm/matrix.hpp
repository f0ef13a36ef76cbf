#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clstm/errors.hpp"

namespace clstm {

// Dense row-major matrix of real scalars. Row index = time step / word
// position throughout the model. T is float in training mode and double in
// gradient-check mode.
template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;  // row-major, rows*cols entries

    Matrix() = default;

    Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

    Matrix(std::size_t r, std::size_t c, std::vector<T> values) : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols) {
            throw ShapeError("matrix data length " + std::to_string(data.size()) + " != " + std::to_string(rows) +
                             "x" + std::to_string(cols));
        }
    }

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c, T(0)); }

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    T operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    T* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const T* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    std::string shape_str() const { return "(" + std::to_string(rows) + "," + std::to_string(cols) + ")"; }
};

namespace detail {

template <typename T>
using EigenRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<const EigenRM<T>> emap(const Matrix<T>& m) {
    return Eigen::Map<const EigenRM<T>>(m.data.data(), static_cast<Eigen::Index>(m.rows),
                                        static_cast<Eigen::Index>(m.cols));
}

template <typename T>
Eigen::Map<EigenRM<T>> emap(Matrix<T>& m) {
    return Eigen::Map<EigenRM<T>>(m.data.data(), static_cast<Eigen::Index>(m.rows),
                                  static_cast<Eigen::Index>(m.cols));
}

inline void check(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

}  // namespace detail

// a (m,k) * b (k,n) -> (m,n)
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    detail::check(a.cols == b.rows, "matmul: " + a.shape_str() + " x " + b.shape_str());
    Matrix<T> out(a.rows, b.cols);
    detail::emap(out).noalias() = detail::emap(a) * detail::emap(b);
    return out;
}

// a^T (k,m)^T * b (k,n) -> (m,n)
template <typename T>
Matrix<T> matmul_ta(const Matrix<T>& a, const Matrix<T>& b) {
    detail::check(a.rows == b.rows, "matmul_ta: " + a.shape_str() + "^T x " + b.shape_str());
    Matrix<T> out(a.cols, b.cols);
    detail::emap(out).noalias() = detail::emap(a).transpose() * detail::emap(b);
    return out;
}

// a (m,k) * b^T (n,k)^T -> (m,n)
template <typename T>
Matrix<T> matmul_tb(const Matrix<T>& a, const Matrix<T>& b) {
    detail::check(a.cols == b.cols, "matmul_tb: " + a.shape_str() + " x " + b.shape_str() + "^T");
    Matrix<T> out(a.rows, b.rows);
    detail::emap(out).noalias() = detail::emap(a) * detail::emap(b).transpose();
    return out;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
    Matrix<T> out(a.cols, a.rows);
    detail::emap(out) = detail::emap(a).transpose();
    return out;
}

enum class EwOp { relu, sigmoid, tanh, mul, add };

template <typename T>
T sigmoid_scalar(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

// Unary form of the elementwise operation; mul/add require two arguments.
template <typename T>
Matrix<T> elementwise(EwOp op, const Matrix<T>& a) {
    Matrix<T> out(a.rows, a.cols);
    switch (op) {
        case EwOp::relu:
            for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] > T(0) ? a.data[i] : T(0);
            break;
        case EwOp::sigmoid:
            for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = sigmoid_scalar(a.data[i]);
            break;
        case EwOp::tanh:
            for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = std::tanh(a.data[i]);
            break;
        default:
            throw ArgumentError("elementwise: mul/add need two matrix arguments");
    }
    return out;
}

// Binary form; both arguments must share one shape.
template <typename T>
Matrix<T> elementwise(EwOp op, const Matrix<T>& a, const Matrix<T>& b) {
    detail::check(a.same_shape(b), "elementwise: " + a.shape_str() + " vs " + b.shape_str());
    Matrix<T> out(a.rows, a.cols);
    switch (op) {
        case EwOp::mul:
            for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
            break;
        case EwOp::add:
            for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
            break;
        default:
            throw ArgumentError("elementwise: relu/sigmoid/tanh take one matrix argument");
    }
    return out;
}

template <typename T>
Matrix<T> relu(const Matrix<T>& a) {
    return elementwise(EwOp::relu, a);
}
template <typename T>
Matrix<T> sigmoid(const Matrix<T>& a) {
    return elementwise(EwOp::sigmoid, a);
}
template <typename T>
Matrix<T> tanh_m(const Matrix<T>& a) {
    return elementwise(EwOp::tanh, a);
}
template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b) {
    return elementwise(EwOp::mul, a, b);
}
template <typename T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b) {
    return elementwise(EwOp::add, a, b);
}

// y += alpha * x
template <typename T>
void axpy(Matrix<T>& y, T alpha, const Matrix<T>& x) {
    detail::check(y.same_shape(x), "axpy: " + y.shape_str() + " vs " + x.shape_str());
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += alpha * x.data[i];
}

template <typename T>
void scale_inplace(Matrix<T>& m, T alpha) {
    for (auto& v : m.data) v *= alpha;
}

// Adds a 1-row bias to every row of m.
template <typename T>
void add_row_inplace(Matrix<T>& m, const Matrix<T>& bias) {
    detail::check(bias.rows == 1 && bias.cols == m.cols,
                  "add_row: bias " + bias.shape_str() + " vs " + m.shape_str());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) += bias(0, j);
}

template <typename T>
Matrix<T> col_sums(const Matrix<T>& m) {
    Matrix<T> out(1, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(0, j) += m(i, j);
    return out;
}

template <typename T>
T sum_squares(const Matrix<T>& m) {
    T s = T(0);
    for (auto v : m.data) s += v * v;
    return s;
}

template <typename T>
T frobenius_dot(const Matrix<T>& a, const Matrix<T>& b) {
    detail::check(a.same_shape(b), "frobenius_dot: " + a.shape_str() + " vs " + b.shape_str());
    T s = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

// Row-wise softmax with max-subtraction; each output row sums to 1.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
    Matrix<T> out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const T* in = logits.row_ptr(i);
        T* o = out.row_ptr(i);
        T mx = in[0];
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, in[j]);
        T z = T(0);
        for (std::size_t j = 0; j < logits.cols; ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (std::size_t j = 0; j < logits.cols; ++j) o[j] /= z;
    }
    return out;
}

}  // namespace clstm
