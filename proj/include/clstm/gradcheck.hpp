#pragma once

#include <string>
#include <vector>

#include "clstm/conv.hpp"

namespace clstm {

// Tiny-model finite-difference check of the whole backward pass, run in
// double precision with clipping off and dropout either off or replayed
// from frozen masks.
struct GradcheckConfig {
    std::vector<BankSpec> banks = {{3, 4}};
    std::size_t vocab_size = 12;
    std::size_t embedding_dim = 5;
    std::size_t maxlen = 7;
    std::size_t d_mem = 6;
    int num_classes = 3;
    std::size_t num_examples = 3;
    double l2_lambda = 0.001;
    bool frozen_embeddings = false;    // skip the embedding block entirely
    bool dropout_frozen_mask = false;  // exercise both dropout sites with fixed masks
    double dropout_p = 0.5;
    bool read_at_true_length = false;
    std::uint64_t seed = 20151130;
    double fd_step = 1e-4;
    double tolerance = 1e-4;
    // Mutation testing: scale one block's analytic gradient and watch
    // exactly that block fail.
    std::string corrupt_block;
    double corrupt_factor = 1.01;
};

struct BlockCheck {
    std::string block;
    double max_rel_err = 0.0;
    bool pass = false;
};

struct GradcheckReport {
    std::vector<BlockCheck> blocks;
    bool pass = false;

    double worst() const {
        double w = 0.0;
        for (const auto& b : blocks) w = std::max(w, b.max_rel_err);
        return w;
    }
};

GradcheckReport gradcheck(const GradcheckConfig& config = {});

std::string format_report(const GradcheckReport& report);

}  // namespace clstm
