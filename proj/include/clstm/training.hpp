#pragma once

#include <map>
#include <string>
#include <vector>

#include "clstm/model.hpp"
#include "clstm/optimizer.hpp"

namespace clstm {

struct Metrics {
    std::size_t epoch = 0;
    std::string split;
    double loss = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;
};

std::string metrics_to_json(const Metrics& m);
void write_metrics_jsonl(const std::string& path, const std::vector<Metrics>& history);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

// Argmax accuracy plus mean cross-entropy, dropout disabled. Ties break to
// the lowest class index.
EvalResult evaluate(const ModelParams<float>& params, const ModelConfig& config, const std::vector<Example>& examples);

int predict_class(const Matrix<float>& probs);

struct TrainResult {
    ModelParams<float> params;  // best-dev parameters (last epoch when there is no dev split)
    std::vector<Metrics> history;
    double best_dev_accuracy = -1.0;
    std::size_t best_epoch = 0;
};

// Minibatch RMSprop over the training split: per epoch a seed-deterministic
// shuffle, forward/backward per example, gradient averaging, global-norm
// clip and one optimizer step per batch; dev accuracy decides which epoch's
// parameters are kept. Deterministic for a fixed (dataset, config, seed)
// regardless of the thread count.
TrainResult train(const Dataset& data, const ModelConfig& config,
                  const std::map<std::string, std::vector<float>>& pretrained = {});

}  // namespace clstm
