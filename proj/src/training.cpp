#include "clstm/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace clstm {

using nlohmann::json;

std::string metrics_to_json(const Metrics& m) {
    json j;
    j["epoch"] = m.epoch;
    j["split"] = m.split;
    j["loss"] = m.loss;
    j["accuracy"] = m.accuracy;
    j["seconds"] = m.seconds;
    return j.dump();
}

void write_metrics_jsonl(const std::string& path, const std::vector<Metrics>& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const Metrics& m : history) out << metrics_to_json(m) << "\n";
}

int predict_class(const Matrix<float>& probs) {
    int best = 0;
    for (std::size_t j = 1; j < probs.cols; ++j)
        if (probs(0, j) > probs(0, best)) best = static_cast<int>(j);
    return best;
}

EvalResult evaluate(const ModelParams<float>& params, const ModelConfig& config,
                    const std::vector<Example>& examples) {
    if (examples.empty()) throw ArgumentError("evaluate: empty example list");
    std::size_t correct = 0;
    double loss = 0.0;
    for (const Example& ex : examples) {
        ForwardCache<float> cache = forward(ex, params, config, Mode::eval, nullptr);
        if (predict_class(cache.probs) == ex.label) ++correct;
        loss += cross_entropy(cache.probs, ex.label);
    }
    return {static_cast<double>(correct) / static_cast<double>(examples.size()),
            loss / static_cast<double>(examples.size())};
}

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct ExampleResult {
    ModelGrads<float> grads;
    float loss = 0.0f;
    bool correct = false;
};

}  // namespace

TrainResult train(const Dataset& data, const ModelConfig& config_in,
                  const std::map<std::string, std::vector<float>>& pretrained) {
    ModelConfig config = config_in;
    if (config.num_classes == 0) config.num_classes = data.num_classes;
    if (config.num_classes != data.num_classes)
        throw ArgumentError("train: config expects " + std::to_string(config.num_classes) + " classes, dataset has " +
                            std::to_string(data.num_classes));
    if (data.train.empty()) throw ArgumentError("train: empty training split");
    validate_banks(config.banks, data.vocab.maxlen);

    Rng rng(config.seed);
    ModelParams<float> params = init_params<float>(config, data.vocab, pretrained, rng);
    OptState<float> state = init_opt_state(params, config.opt);
    std::set<std::string> frozen;
    if (!config.trainable_embeddings) frozen.insert("embedding");

    bool uses_dropout = config.dropout_p > 0.0 && !config.dropout_sites.empty();
    std::size_t threads = std::max<std::size_t>(1, config.threads);

    TrainResult result;
    result.params = params;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double t0 = now_seconds();
        auto batches = make_batches(data.train.size(), config.batch_size, rng, /*shuffle=*/true);

        double epoch_loss = 0.0;
        std::size_t train_correct = 0;
        for (const auto& batch : batches) {
            // Per-example dropout streams are drawn up front so the batch can
            // be mapped over in parallel without touching the main rng.
            std::vector<std::uint64_t> seeds(batch.size(), 0);
            if (uses_dropout)
                for (auto& s : seeds) s = rng.next_u64();

            std::vector<ExampleResult> results(batch.size());
            auto run_range = [&](std::size_t lo, std::size_t hi) {
                for (std::size_t i = lo; i < hi; ++i) {
                    const Example& ex = data.train[batch[i]];
                    Rng ex_rng(seeds[i]);
                    ForwardCache<float> cache =
                        forward(ex, params, config, Mode::train, uses_dropout ? &ex_rng : nullptr);
                    results[i].loss = cross_entropy(cache.probs, ex.label);
                    results[i].correct = predict_class(cache.probs) == ex.label;
                    results[i].grads = backward(cache, ex.label, params, config);
                }
            };
            if (threads == 1 || batch.size() < 2) {
                run_range(0, batch.size());
            } else {
                std::size_t nthreads = std::min(threads, batch.size());
                std::vector<std::thread> pool;
                std::size_t chunk = (batch.size() + nthreads - 1) / nthreads;
                for (std::size_t t = 0; t < nthreads; ++t) {
                    std::size_t lo = t * chunk, hi = std::min(batch.size(), lo + chunk);
                    if (lo < hi) pool.emplace_back(run_range, lo, hi);
                }
                for (auto& th : pool) th.join();
            }

            // Reduce in example order; the result is independent of the
            // thread count.
            ModelGrads<float> grads = zero_grads(params);
            double batch_ce = 0.0;
            for (std::size_t i = 0; i < results.size(); ++i) {
                grads.add_scaled(results[i].grads, 1.0f);
                batch_ce += results[i].loss;
                if (results[i].correct) ++train_correct;
            }
            grads.scale(1.0f / static_cast<float>(results.size()));
            double batch_loss = batch_ce / static_cast<double>(results.size()) +
                                l2_penalty(params.head, static_cast<float>(config.l2_lambda));
            if (!std::isfinite(batch_loss))
                throw NumericError("training loss is not finite at epoch " + std::to_string(epoch));
            epoch_loss += batch_loss;

            if (config.opt.clip_enabled) clip_global_norm(grads, config.opt.clip_norm);
            apply_updates(params, grads, state, frozen);
        }

        Metrics train_row;
        train_row.epoch = epoch;
        train_row.split = "train";
        train_row.loss = epoch_loss / static_cast<double>(batches.size());
        train_row.accuracy = static_cast<double>(train_correct) / static_cast<double>(data.train.size());
        train_row.seconds = now_seconds() - t0;
        result.history.push_back(train_row);

        if (!data.dev.empty()) {
            double t1 = now_seconds();
            EvalResult dev = evaluate(params, config, data.dev);
            Metrics dev_row;
            dev_row.epoch = epoch;
            dev_row.split = "dev";
            dev_row.loss = dev.mean_loss;
            dev_row.accuracy = dev.accuracy;
            dev_row.seconds = now_seconds() - t1;
            result.history.push_back(dev_row);
            if (dev.accuracy > result.best_dev_accuracy) {
                result.best_dev_accuracy = dev.accuracy;
                result.best_epoch = epoch;
                result.params = params;
            }
        } else {
            result.best_epoch = epoch;
            result.params = params;
        }
    }
    return result;
}

}  // namespace clstm
