#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "clstm/model_params.hpp"

namespace clstm {

// RMSprop mean-square accumulators, one per parameter block, all starting
// at zero. Shapes mirror the parameter shapes exactly.
template <typename T>
struct OptState {
    std::map<std::string, Matrix<T>> acc;
    OptHyper hyper;
};

template <typename T>
OptState<T> init_opt_state(const ModelParams<T>& params, const OptHyper& hyper) {
    OptState<T> state;
    state.hyper = hyper;
    for_each_block(params, [&](const std::string& name, const Matrix<T>& block) {
        state.acc.emplace(name, Matrix<T>(block.rows, block.cols));
    });
    return state;
}

// s <- rho*s + (1-rho)*grad^2;  param <- param - lr*grad/sqrt(s+eps)
template <typename T>
void rmsprop_step(Matrix<T>& param, const Matrix<T>& grad, Matrix<T>& acc, const OptHyper& hyper) {
    if (!param.same_shape(grad) || !param.same_shape(acc))
        throw ShapeError("rmsprop_step: param " + param.shape_str() + ", grad " + grad.shape_str() + ", acc " +
                         acc.shape_str());
    const T rho = static_cast<T>(hyper.rho);
    const T lr = static_cast<T>(hyper.lr);
    const T eps = static_cast<T>(hyper.eps);
    for (std::size_t i = 0; i < param.size(); ++i) {
        T g = grad.data[i];
        acc.data[i] = rho * acc.data[i] + (T(1) - rho) * g * g;
        param.data[i] -= lr * g / std::sqrt(acc.data[i] + eps);
    }
}

// Scales every block by max_norm/norm when the concatenated gradient 2-norm
// exceeds max_norm. Returns the pre-clip norm.
template <typename T>
double clip_global_norm(ModelGrads<T>& grads, double max_norm) {
    if (max_norm <= 0) throw ArgumentError("clip_global_norm: max_norm must be > 0");
    double norm = std::sqrt(static_cast<double>(grads.sum_squares()));
    if (norm > max_norm) grads.scale(static_cast<T>(max_norm / norm));
    return norm;
}

// One RMSprop step over every block. Blocks named in `frozen` stay
// untouched; the embedding block updates sparsely, touching (and decaying
// the accumulator of) only the rows with nonzero gradient.
template <typename T>
void apply_updates(ModelParams<T>& params, const ModelGrads<T>& grads, OptState<T>& state,
                   const std::set<std::string>& frozen = {}) {
    std::vector<std::pair<std::string, Matrix<T>*>> blocks;
    for_each_block(params, [&](const std::string& name, Matrix<T>& block) { blocks.emplace_back(name, &block); });

    for (const std::string& name : frozen) {
        bool known = false;
        for (const auto& [bname, ptr] : blocks) known |= (bname == name);
        if (!known) throw ArgumentError("apply_updates: unknown frozen block '" + name + "'");
    }

    std::vector<const Matrix<T>*> dense;
    grads.for_each_dense([&](const Matrix<T>& m) { dense.push_back(&m); });
    if (dense.size() + 1 != blocks.size())
        throw ArgumentError("apply_updates: gradient block count " + std::to_string(dense.size() + 1) +
                            " != parameter block count " + std::to_string(blocks.size()));

    for (std::size_t i = 1; i < blocks.size(); ++i) {
        const auto& [name, block] = blocks[i];
        if (frozen.count(name)) continue;
        rmsprop_step(*block, *dense[i - 1], state.acc.at(name), state.hyper);
    }

    if (frozen.count("embedding") || !params.emb.trainable) return;
    Matrix<T>& table = params.emb.table;
    Matrix<T>& acc = state.acc.at("embedding");
    const T rho = static_cast<T>(state.hyper.rho);
    const T lr = static_cast<T>(state.hyper.lr);
    const T eps = static_cast<T>(state.hyper.eps);
    for (const auto& [id, g] : grads.embedding.rows) {
        T* prow = table.row_ptr(static_cast<std::size_t>(id));
        T* srow = acc.row_ptr(static_cast<std::size_t>(id));
        for (std::size_t j = 0; j < table.cols; ++j) {
            srow[j] = rho * srow[j] + (T(1) - rho) * g[j] * g[j];
            prow[j] -= lr * g[j] / std::sqrt(srow[j] + eps);
        }
    }
}

}  // namespace clstm
