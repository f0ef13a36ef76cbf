#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clstm/checkpoint.hpp"
#include "clstm/gradcheck.hpp"
#include "clstm/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace clstm;

namespace {

struct ConfigFlags {
    std::string task, banks, dropout_sites;
    std::size_t filters = 0, mem = 0, batch = 0, epochs = 0, threads = 0;
    double dropout = 0, l2 = 0, lr = 0;
    std::uint64_t seed = 0;
    bool read_at_true_length = false, no_finetune = false, no_clip = false;

    CLI::Option *o_task = nullptr, *o_banks = nullptr, *o_sites = nullptr, *o_filters = nullptr, *o_mem = nullptr,
                *o_batch = nullptr, *o_epochs = nullptr, *o_threads = nullptr, *o_dropout = nullptr, *o_l2 = nullptr,
                *o_lr = nullptr, *o_seed = nullptr, *o_ratl = nullptr, *o_nofine = nullptr, *o_noclip = nullptr;

    void attach(CLI::App* cmd) {
        o_task = cmd->add_option("--task", task, "Task: sst5, sst2 or trec6");
        o_banks = cmd->add_option("--banks", banks, "Filter lengths, e.g. 3 or 2,3,4 (k or k:n items)");
        o_filters = cmd->add_option("--filters", filters, "Filters per bank");
        o_mem = cmd->add_option("--mem", mem, "LSTM memory dimension");
        o_dropout = cmd->add_option("--dropout", dropout, "Dropout probability");
        o_sites = cmd->add_option("--dropout-sites", dropout_sites, "word_vectors,lstm_output or none");
        o_l2 = cmd->add_option("--l2", l2, "L2 factor on the softmax weights");
        o_lr = cmd->add_option("--lr", lr, "RMSprop learning rate");
        o_batch = cmd->add_option("--batch", batch, "Minibatch size");
        o_epochs = cmd->add_option("--epochs", epochs, "Training epochs");
        o_seed = cmd->add_option("--seed", seed, "Random seed");
        o_threads = cmd->add_option("--threads", threads, "Worker threads per batch");
        o_ratl = cmd->add_flag("--read-at-true-length", read_at_true_length,
                               "Read the sentence representation at the last unpadded window");
        o_nofine = cmd->add_flag("--freeze-embeddings", no_finetune, "Do not fine-tune word vectors");
        o_noclip = cmd->add_flag("--no-clip", no_clip, "Disable global-norm gradient clipping");
    }

    // Command line beats config file beats defaults.
    void apply(ModelConfig& config) const {
        if (*o_task) config.task = task_from_name(task);
        if (*o_filters) {
            for (auto& b : config.banks) b.n = filters;
        }
        if (*o_banks) config.banks = parse_banks(banks, *o_filters ? filters : config.banks.front().n);
        if (*o_mem) config.d_mem = mem;
        if (*o_dropout) config.dropout_p = dropout;
        if (*o_sites) config.dropout_sites = parse_dropout_sites(dropout_sites);
        if (*o_l2) config.l2_lambda = l2;
        if (*o_lr) config.opt.lr = lr;
        if (*o_batch) config.batch_size = batch;
        if (*o_epochs) config.max_epochs = epochs;
        if (*o_seed) config.seed = seed;
        if (*o_threads) config.threads = threads;
        if (*o_ratl) config.read_at_true_length = true;
        if (*o_nofine) config.trainable_embeddings = false;
        if (*o_noclip) config.opt.clip_enabled = false;
        if (config.dropout_p < 0 || config.dropout_p >= 1) throw ArgumentError("dropout must lie in [0, 1)");
    }
};

ModelConfig build_config(const std::string& config_path, const ConfigFlags& flags) {
    ModelConfig config;
    if (!config_path.empty()) load_config_file(config, config_path);
    flags.apply(config);
    return config;
}

Dataset load_for(const ModelConfig& config, const std::string& data_dir, bool phrases, std::size_t holdout) {
    if (data_dir.empty()) throw ArgumentError("--data-dir is required");
    if (config.task == Task::trec6) return load_trec(data_dir, holdout, config.seed);
    return load_sst(data_dir, config.task, phrases);
}

std::map<std::string, std::vector<float>> load_pretrained(const std::string& path, const Vocab& vocab) {
    if (path.empty()) return {};
    if (path.size() > 4 && path.substr(path.size() - 4) == ".txt") return read_vectors_text(path, vocab);
    return read_word2vec_binary(path, vocab);
}

int run_train(const std::string& config_path, const ConfigFlags& flags, const std::string& data_dir,
              const std::string& embeddings, const std::string& out_dir, bool phrases, std::size_t holdout) {
    ModelConfig config = build_config(config_path, flags);
    Dataset data = load_for(config, data_dir, phrases, holdout);
    config.num_classes = data.num_classes;
    std::cout << "task " << task_name(config.task) << ": train " << data.train.size() << ", dev " << data.dev.size()
              << ", test " << data.test.size() << ", vocab " << data.vocab.size() << ", maxlen " << data.vocab.maxlen
              << "\n";

    auto pretrained = load_pretrained(embeddings, data.vocab);
    if (!embeddings.empty())
        std::cout << "pretrained vectors matched " << pretrained.size() << "/" << data.vocab.size() << " tokens\n";

    TrainResult result = train(data, config, pretrained);

    fs::create_directories(out_dir);
    std::string ckpt_path = (fs::path(out_dir) / "checkpoint.bin").string();
    save_checkpoint(ckpt_path, config, data.vocab, result.params);
    write_metrics_jsonl((fs::path(out_dir) / "metrics.jsonl").string(), result.history);

    for (const Metrics& m : result.history)
        if (m.split == "dev" || result.history.size() <= 8) std::cout << metrics_to_json(m) << "\n";
    if (result.best_dev_accuracy >= 0)
        std::cout << "best dev accuracy " << result.best_dev_accuracy << " at epoch " << result.best_epoch << "\n";
    std::cout << "checkpoint written to " << ckpt_path << "\n";
    return 0;
}

std::vector<Example> eval_examples(const Checkpoint& ckpt, const std::string& data_dir, const std::string& split,
                                   std::size_t holdout) {
    std::vector<Phrase> entries;
    if (ckpt.config.task == Task::trec6)
        entries = load_trec_split(data_dir, split, holdout, ckpt.config.seed);
    else
        entries = load_sst_split(data_dir, ckpt.config.task, split, PhraseMode::sentences_only);
    std::vector<Example> out;
    out.reserve(entries.size());
    for (const Phrase& p : entries) out.push_back(encode_pad(p.tokens, p.label, ckpt.vocab));
    return out;
}

int run_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& split, bool as_json,
             std::size_t holdout) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (data_dir.empty()) throw ArgumentError("--data-dir is required");
    std::vector<Example> examples = eval_examples(ckpt, data_dir, split, holdout);
    EvalResult r = evaluate(ckpt.params, ckpt.config, examples);
    if (as_json) {
        json j;
        j["task"] = task_name(ckpt.config.task);
        j["split"] = split;
        j["examples"] = examples.size();
        j["accuracy"] = r.accuracy;
        j["accuracy_percent"] = 100.0 * r.accuracy;
        j["loss"] = r.mean_loss;
        std::cout << j.dump() << "\n";
    } else {
        std::printf("%s %s accuracy: %.4f (%.2f%%) over %zu examples, mean loss %.4f\n",
                    task_name(ckpt.config.task), split.c_str(), r.accuracy, 100.0 * r.accuracy, examples.size(),
                    r.mean_loss);
    }
    return 0;
}

int run_gradcheck(const std::string& banks, std::size_t filters, bool frozen_emb, bool frozen_dropout, bool ratl,
                  std::uint64_t seed, bool seed_set, const std::string& corrupt_block, double corrupt_factor,
                  bool as_json) {
    GradcheckConfig gc;
    if (!banks.empty()) gc.banks = parse_banks(banks, filters);
    gc.frozen_embeddings = frozen_emb;
    gc.dropout_frozen_mask = frozen_dropout;
    gc.read_at_true_length = ratl;
    if (seed_set) gc.seed = seed;
    gc.corrupt_block = corrupt_block;
    gc.corrupt_factor = corrupt_factor;

    GradcheckReport report = gradcheck(gc);
    if (as_json) {
        json j;
        j["pass"] = report.pass;
        json blocks = json::array();
        for (const auto& b : report.blocks)
            blocks.push_back({{"block", b.block}, {"max_rel_err", b.max_rel_err}, {"pass", b.pass}});
        j["blocks"] = blocks;
        std::cout << j.dump() << "\n";
    } else {
        std::cout << format_report(report);
    }
    return report.pass ? 0 : 3;
}

int run_ablation(const std::string& config_path, const ConfigFlags& flags, const std::string& data_dir,
                 const std::string& embeddings, const std::string& out_dir, bool phrases, std::size_t holdout) {
    ModelConfig base = build_config(config_path, flags);
    Dataset data = load_for(base, data_dir, phrases, holdout);
    base.num_classes = data.num_classes;
    auto pretrained = load_pretrained(embeddings, data.vocab);

    // Figure-2 style sweep: single banks, then parallel combinations.
    const std::vector<std::pair<std::string, std::vector<std::size_t>>> configs = {
        {"S:2", {2}},     {"S:3", {3}},     {"S:4", {4}},       {"M:2+3", {2, 3}},
        {"M:2+4", {2, 4}}, {"M:3+4", {3, 4}}, {"M:2+3+4", {2, 3, 4}},
    };

    fs::create_directories(out_dir);
    std::string csv_path = (fs::path(out_dir) / "ablation.csv").string();
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot open " + csv_path + " for writing");
    csv << "config,accuracy,seconds\n";

    std::size_t filters = base.banks.front().n;
    for (const auto& [name, ks] : configs) {
        ModelConfig config = base;
        config.banks.clear();
        for (std::size_t k : ks) config.banks.push_back({k, filters});

        auto t0 = std::chrono::steady_clock::now();
        TrainResult result = train(data, config, pretrained);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double acc = evaluate(result.params, config, data.test).accuracy;

        std::string tag = name;
        for (char& c : tag) {
            if (c == ':') c = '_';
            if (c == '+') c = '-';
        }
        save_checkpoint((fs::path(out_dir) / ("checkpoint_" + tag + ".bin")).string(), config, data.vocab,
                        result.params);
        csv << name << "," << acc << "," << secs << "\n";
        csv.flush();
        std::printf("%-8s test accuracy %.4f  (%.1fs)\n", name.c_str(), acc, secs);
    }
    std::cout << "ablation table written to " << csv_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"C-LSTM sentence classification: n-gram convolution feeding an LSTM"};
    app.require_subcommand(1);

    std::string config_path, data_dir, embeddings, out_dir = "out", split = "test", ckpt_path;
    bool phrases = false, as_json = false;
    std::size_t holdout = 0;

    auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint + metrics");
    ConfigFlags train_flags;
    train_flags.attach(train_cmd);
    train_cmd->add_option("--config", config_path, "Flat JSON config file");
    train_cmd->add_option("--data-dir", data_dir, "Dataset directory");
    train_cmd->add_option("--embeddings", embeddings, "word2vec binary (or .txt) vectors");
    train_cmd->add_option("--out", out_dir, "Output directory");
    train_cmd->add_flag("--phrases", phrases, "SST: train on all phrases, not only sentences");
    train_cmd->add_option("--holdout", holdout, "TREC: hold out this many training samples as dev");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint; prints accuracy");
    eval_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
    eval_cmd->add_option("--data-dir", data_dir, "Dataset directory");
    eval_cmd->add_option("--split", split, "train, dev or test");
    eval_cmd->add_option("--holdout", holdout, "TREC: dev holdout size used at training time");
    eval_cmd->add_flag("--json", as_json, "Emit one machine-readable JSON object");

    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every gradient block");
    std::string gc_banks, corrupt_block;
    std::size_t gc_filters = 4;
    bool gc_frozen_emb = false, gc_frozen_drop = false, gc_ratl = false;
    std::uint64_t gc_seed = 0;
    double corrupt_factor = 1.01;
    auto* gc_seed_opt = grad_cmd->add_option("--seed", gc_seed, "Random seed");
    grad_cmd->add_option("--banks", gc_banks, "Filter lengths, e.g. 2,3,4");
    grad_cmd->add_option("--filters", gc_filters, "Filters per bank");
    grad_cmd->add_flag("--frozen-embeddings", gc_frozen_emb, "Check with a frozen embedding table");
    grad_cmd->add_flag("--dropout-frozen-mask", gc_frozen_drop, "Check through fixed dropout masks");
    grad_cmd->add_flag("--read-at-true-length", gc_ratl, "Check the true-length representation read");
    grad_cmd->add_option("--corrupt-block", corrupt_block, "Scale this block's analytic gradient (mutation test)");
    grad_cmd->add_option("--corrupt-factor", corrupt_factor, "Scale factor for --corrupt-block");
    grad_cmd->add_flag("--json", as_json, "Emit the report as JSON");

    auto* abl_cmd = app.add_subcommand("ablation", "Train every filter-size strategy, write a CSV");
    ConfigFlags abl_flags;
    abl_flags.attach(abl_cmd);
    abl_cmd->add_option("--config", config_path, "Flat JSON config file");
    abl_cmd->add_option("--data-dir", data_dir, "Dataset directory");
    abl_cmd->add_option("--embeddings", embeddings, "word2vec binary (or .txt) vectors");
    abl_cmd->add_option("--out", out_dir, "Output directory");
    abl_cmd->add_flag("--phrases", phrases, "SST: train on all phrases");
    abl_cmd->add_option("--holdout", holdout, "TREC: dev holdout size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*train_cmd) return run_train(config_path, train_flags, data_dir, embeddings, out_dir, phrases, holdout);
        if (*eval_cmd) return run_eval(ckpt_path, data_dir, split, as_json, holdout);
        if (*grad_cmd)
            return run_gradcheck(gc_banks, gc_filters, gc_frozen_emb, gc_frozen_drop, gc_ratl, gc_seed,
                                 gc_seed_opt->count() > 0, corrupt_block, corrupt_factor, as_json);
        if (*abl_cmd) return run_ablation(config_path, abl_flags, data_dir, embeddings, out_dir, phrases, holdout);
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
