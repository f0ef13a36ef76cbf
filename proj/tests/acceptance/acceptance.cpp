// Acceptance suite: every binding criterion asserted at its stated
// tolerance, one printed PASS/FAIL line per criterion. Criteria that need
// the official corpora (dataset cardinalities, the desk-scale TREC band)
// run when those files are present and print SKIP otherwise.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "clstm/checkpoint.hpp"
#include "clstm/gradcheck.hpp"
#include "clstm/training.hpp"

using namespace clstm;
namespace fs = std::filesystem;

namespace {

void report(const std::string& id, bool pass, const std::string& detail) {
    std::printf("CRITERION %s: %s — %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(pass, "criterion ", id, ": ", detail);
}

void report_skip(const std::string& id, const std::string& reason) {
    std::printf("CRITERION %s: SKIP — %s\n", id.c_str(), reason.c_str());
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string official_dir(const char* env_name, const char* fallback) {
    if (const char* env = std::getenv(env_name); env && *env) return env;
    std::string dir = std::string(CLSTM_DATA_DIR) + "/" + fallback;
    if (fs::exists(dir + "/train.txt") || fs::exists(dir + "/train_5500.label")) return dir;
    return {};
}

Vocab synthetic_vocab(std::size_t size, std::size_t maxlen) {
    Vocab v;
    v.unk_id = 0;
    v.id_to_token.push_back("<unk>");
    v.token_to_id["<unk>"] = 0;
    for (std::size_t i = 1; i < size; ++i) {
        v.id_to_token.push_back("w" + std::to_string(i));
        v.token_to_id["w" + std::to_string(i)] = static_cast<int>(i);
    }
    v.maxlen = maxlen;
    return v;
}

bool contains_trigram(const std::vector<int>& ids, const std::vector<int>& pattern) {
    for (std::size_t j = 0; j + pattern.size() <= ids.size(); ++j) {
        bool hit = true;
        for (std::size_t u = 0; u < pattern.size(); ++u) hit &= ids[j + u] == pattern[u];
        if (hit) return true;
    }
    return false;
}

// Two classes keyed to the presence of one trigram pattern; vocab 30,
// maxlen 10, 20 examples.
Dataset trigram_task(std::uint64_t seed) {
    const std::vector<int> pattern = {4, 9, 2};
    Dataset d;
    d.task = Task::sst2;
    d.num_classes = 2;
    d.vocab = synthetic_vocab(30, 10);
    Rng rng(seed);
    while (d.train.size() < 20) {
        Example ex;
        ex.ids.resize(10);
        for (auto& id : ex.ids) id = static_cast<int>(rng.next_below(30));
        bool positive = d.train.size() % 2 == 0;
        if (positive) {
            std::size_t pos = rng.next_below(10 - 3 + 1);
            for (std::size_t u = 0; u < 3; ++u) ex.ids[pos + u] = pattern[u];
        } else if (contains_trigram(ex.ids, pattern)) {
            continue;
        }
        ex.label = positive ? 1 : 0;
        ex.true_length = 10;
        d.train.push_back(std::move(ex));
    }
    return d;
}

// Six classes, each keyed to its own planted trigram, at desk scale.
Dataset six_class_task(std::uint64_t seed, std::size_t train_n, std::size_t dev_n, std::size_t test_n) {
    Dataset d;
    d.task = Task::trec6;
    d.num_classes = 6;
    d.vocab = synthetic_vocab(300, 12);
    Rng rng(seed);
    auto sample = [&](std::size_t n, std::vector<Example>& out) {
        while (out.size() < n) {
            int label = static_cast<int>(rng.next_below(6));
            Example ex;
            ex.ids.resize(12);
            for (auto& id : ex.ids) id = static_cast<int>(60 + rng.next_below(240));
            std::vector<int> pattern = {label * 10 + 1, label * 10 + 3, label * 10 + 5};
            std::size_t pos = rng.next_below(12 - 3 + 1);
            for (std::size_t u = 0; u < 3; ++u) ex.ids[pos + u] = pattern[u];
            ex.label = label;
            ex.true_length = 12;
            out.push_back(std::move(ex));
        }
    };
    sample(train_n, d.train);
    sample(dev_n, d.dev);
    sample(test_n, d.test);
    return d;
}

}  // namespace

TEST_CASE("criterion 1: gradient oracle") {
    auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    double worst = 0.0;

    GradcheckConfig base;
    GradcheckReport r_base = gradcheck(base);
    pass &= r_base.pass;

    GradcheckConfig multi;
    multi.banks = {{2, 4}, {3, 4}, {4, 4}};
    GradcheckReport r_multi = gradcheck(multi);
    pass &= r_multi.pass;

    GradcheckConfig frozen;
    frozen.frozen_embeddings = true;
    GradcheckReport r_frozen = gradcheck(frozen);
    pass &= r_frozen.pass;

    GradcheckConfig dropped;
    dropped.dropout_frozen_mask = true;
    GradcheckReport r_drop = gradcheck(dropped);
    pass &= r_drop.pass;

    worst = std::max({r_base.worst(), r_multi.worst(), r_frozen.worst(), r_drop.worst()});
    double secs = seconds_since(t0);
    pass &= secs < 60.0;

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "default + multi-bank{2,3,4} + frozen-embeddings + dropout-frozen-mask, worst rel err %.2e "
                  "(tol 1e-4), %.1fs (< 60s)",
                  worst, secs);
    report("1", pass, detail);
}

TEST_CASE("criterion 2: mutation sensitivity") {
    const std::vector<std::string> targets = {"conv.k3.weights", "lstm.W_q", "head.W", "embedding"};
    bool pass = true;
    for (const std::string& target : targets) {
        GradcheckConfig gc;
        gc.corrupt_block = target;  // 1% error injected into that block's backward result
        GradcheckReport report_ = gradcheck(gc);
        pass &= !report_.pass;
        for (const auto& b : report_.blocks) pass &= (b.block == target) ? !b.pass : b.pass;
    }
    report("2", pass, "1% corruption of conv weights / lstm.W_q / head.W / embedding fails exactly that block");
}

TEST_CASE("criterion 3: overfit oracle") {
    auto t0 = std::chrono::steady_clock::now();
    Dataset task = trigram_task(2016);

    ModelConfig config;
    config.task = Task::sst2;
    config.embedding_dim = 16;
    config.banks = {{3, 16}};
    config.d_mem = 16;
    config.dropout_p = 0.0;
    config.dropout_sites.clear();
    config.l2_lambda = 0.001;
    config.opt.lr = 1e-3;
    config.batch_size = 4;
    config.max_epochs = 200;
    config.seed = 7;
    config.num_classes = 2;

    TrainResult result = train(task, config);
    double train_acc = evaluate(result.params, config, task.train).accuracy;
    std::size_t first_perfect = 0;
    for (const Metrics& m : result.history)
        if (m.split == "train" && m.accuracy == 1.0 && first_perfect == 0) first_perfect = m.epoch;
    double secs = seconds_since(t0);

    bool pass = train_acc == 1.0 && secs < 30.0;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "20-example trigram task: train accuracy %.3f (first perfect epoch %zu of <= 200), %.1fs (< 30s)",
                  train_acc, first_perfect, secs);
    report("3", pass, detail);
}

TEST_CASE("criterion 4: shape laws") {
    Rng rng(303);
    bool pass = true;
    for (std::size_t length = 3; length <= 20; ++length) {
        for (std::size_t k = 1; k <= 4 && k <= length; ++k) {
            Matrix<double> x = rng_uniform<double>(rng, -1, 1, length, 3);
            FilterBank<double> bank = init_filter_bank<double>(k, 2, 3, rng);
            pass &= conv_forward(x, bank).features.rows == length - k + 1;
        }
        if (length >= 4) {
            Matrix<double> x = rng_uniform<double>(rng, -1, 1, length, 3);
            std::vector<FilterBank<double>> banks;
            banks.push_back(init_filter_bank<double>(2, 2, 3, rng));
            banks.push_back(init_filter_bank<double>(4, 2, 3, rng));
            pass &= multi_bank_forward(x, banks).features.rows == length - 3;
        }
    }
    report("4", pass, "single-bank rows == L-k+1 for all L in [3,20], k in [1,4]; multi-bank {2,4} rows == L-3");
}

TEST_CASE("criterion 5: dataset fidelity") {
    // Parser round trip on a 200-tree fixture always runs.
    Rng rng(505);
    bool roundtrip = true;
    std::function<SstNode(std::size_t)> random_tree = [&](std::size_t leaves) {
        SstNode n;
        n.label = static_cast<int>(rng.next_below(5));
        if (leaves == 1) {
            n.token = "t" + std::to_string(rng.next_below(40));
            return n;
        }
        std::size_t left = 1 + rng.next_below(leaves - 1);
        n.children.push_back(random_tree(left));
        n.children.push_back(random_tree(leaves - left));
        return n;
    };
    for (int i = 0; i < 200; ++i) {
        SstNode tree = random_tree(1 + rng.next_below(14));
        roundtrip &= parse_sst_tree(to_sexpr(tree)) == tree;
    }
    report("5a", roundtrip, "parser round trip exact on the 200-tree fixture");

    std::string sst_dir = official_dir("CLSTM_SST_DIR", "sst");
    if (sst_dir.empty()) {
        report_skip("5b", "official SST files not present (set CLSTM_SST_DIR or place them in data/sst)");
    } else {
        Dataset d5 = load_sst(sst_dir, Task::sst5, false);
        Dataset d2 = load_sst(sst_dir, Task::sst2, false);
        bool pass = d5.train.size() == 8544 && d5.dev.size() == 1101 && d5.test.size() == 2210 &&
                    d2.train.size() == 6920 && d2.dev.size() == 872 && d2.test.size() == 1821;
        char detail[200];
        std::snprintf(detail, sizeof(detail), "SST-5 %zu/%zu/%zu (want 8544/1101/2210), SST-2 %zu/%zu/%zu (want 6920/872/1821)",
                      d5.train.size(), d5.dev.size(), d5.test.size(), d2.train.size(), d2.dev.size(), d2.test.size());
        report("5b", pass, detail);
    }

    std::string trec_dir = official_dir("CLSTM_TREC_DIR", "trec");
    if (trec_dir.empty()) {
        report_skip("5c", "official TREC files not present (set CLSTM_TREC_DIR or place them in data/trec)");
    } else {
        Dataset d = load_trec(trec_dir, 0, 0);
        bool pass = d.train.size() == 5452 && d.test.size() == 500;
        char detail[120];
        std::snprintf(detail, sizeof(detail), "TREC %zu/%zu (want 5452/500)", d.train.size(), d.test.size());
        report("5c", pass, detail);
    }
}

TEST_CASE("criterion 6: desk-scale TREC band") {
    std::string trec_dir = official_dir("CLSTM_TREC_DIR", "trec");
    if (trec_dir.empty()) {
        report_skip("6", "official TREC files not present; when available: random d=50 embeddings, k=3 n=100, "
                         "mem=100, dropout 0.5, L2 0.001, <= 30 epochs, band >= 0.80");
        return;
    }
    auto t0 = std::chrono::steady_clock::now();
    Dataset data = load_trec(trec_dir, 0, 0);

    ModelConfig config;
    config.task = Task::trec6;
    config.embedding_dim = 50;
    config.banks = {{3, 100}};
    config.d_mem = 100;
    config.dropout_p = 0.5;
    config.l2_lambda = 0.001;
    config.batch_size = 32;
    config.max_epochs = 30;
    config.seed = 1;
    config.threads = 4;
    config.num_classes = 6;

    TrainResult result = train(data, config);
    double acc = evaluate(result.params, config, data.test).accuracy;
    double secs = seconds_since(t0);
    char detail[160];
    std::snprintf(detail, sizeof(detail), "full TREC, random 50-d embeddings: test accuracy %.4f (band >= 0.80), %.0fs",
                  acc, secs);
    report("6", acc >= 0.80, detail);
}

TEST_CASE("criterion 7: headline accuracies are documented, not gated") {
    // 49.2 / 87.8 (SST) and 94.6 (TREC) need pretrained 300-d word2vec and
    // long training; the repo documents the full-settings command instead of
    // gating on it.
    std::ifstream readme(std::string(CLSTM_SOURCE_DIR) + "/README.md");
    std::stringstream ss;
    ss << readme.rdbuf();
    std::string text = ss.str();
    bool documented = text.find("GoogleNews-vectors-negative300.bin") != std::string::npos &&
                      text.find("--embeddings") != std::string::npos;
    report("7", documented, "README documents the full-settings command with pretrained GoogleNews vectors");
}

TEST_CASE("criterion 8: statistical properties") {
    // dropout expectation at p = 0.5 over 1e5 trials
    Rng rng(808);
    Matrix<float> one(1, 1, 1.0f);
    double sum = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) sum += dropout(one, 0.5, rng).out(0, 0);
    double drop_mean = sum / trials;
    bool drop_ok = std::abs(drop_mean - 1.0) < 0.02;

    // first-batch loss within 10% of ln(num_classes) across 20 seeds
    Vocab v = synthetic_vocab(16, 7);
    ModelConfig config;
    config.embedding_dim = 5;
    config.banks = {{3, 4}};
    config.d_mem = 6;
    config.num_classes = 3;
    config.dropout_p = 0.0;
    config.dropout_sites.clear();
    const double target = std::log(3.0);
    bool loss_ok = true;
    double worst_ratio = 1.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng init_rng(seed);
        ModelParams<float> params = init_params<float>(config, v, {}, init_rng);
        double loss = 0.0;
        for (int i = 0; i < 16; ++i) {
            Example ex;
            ex.ids.resize(7);
            for (auto& id : ex.ids) id = static_cast<int>(init_rng.next_below(16));
            ex.label = static_cast<int>(init_rng.next_below(3));
            ex.true_length = 7;
            loss += cross_entropy(forward(ex, params, config, Mode::eval, nullptr).probs, ex.label);
        }
        loss = loss / 16.0 + l2_penalty(params.head, static_cast<float>(config.l2_lambda));
        double ratio = loss / target;
        worst_ratio = std::max(worst_ratio, std::max(ratio, 1.0 / ratio));
        loss_ok &= ratio >= 0.9 && ratio <= 1.1;
    }

    // RMSprop constant-gradient fixed point after 500 steps
    OptHyper hyper;
    hyper.lr = 1.0;
    Matrix<double> param(1, 1), acc(1, 1), grad(1, 1, {2.0});
    double step = 0.0;
    for (int i = 0; i < 500; ++i) {
        double before = param(0, 0);
        rmsprop_step(param, grad, acc, hyper);
        step = before - param(0, 0);
    }
    double expected = hyper.lr * 2.0 / std::sqrt(4.0 + hyper.eps);
    bool rmsprop_ok = std::abs(step - expected) < 1e-3 && std::abs(step - hyper.lr) < 1e-3;

    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "dropout mean %.4f (tol 0.02), first-batch loss worst ratio %.3f of ln(k) (tol 1.10), "
                  "rmsprop step |%.6f - %.6f| < 1e-3",
                  drop_mean, worst_ratio, step, expected);
    report("8", drop_ok && loss_ok && rmsprop_ok, detail);
}

TEST_CASE("criterion 9: determinism") {
    Dataset data = load_sst(std::string(CLSTM_FIXTURE_DIR) + "/sst_tiny", Task::sst5, false);
    ModelConfig config;
    config.task = Task::sst5;
    config.embedding_dim = 8;
    config.banks = {{3, 6}};
    config.d_mem = 6;
    config.dropout_p = 0.5;
    config.batch_size = 4;
    config.max_epochs = 3;
    config.seed = 77;
    config.num_classes = 5;
    config.threads = 2;

    auto run_once = [&](const std::string& path) {
        TrainResult result = train(data, config);
        save_checkpoint(path, config, data.vocab, result.params);
        return result.history;
    };
    std::string p1 = "/tmp/clstm_acc_det1.bin", p2 = "/tmp/clstm_acc_det2.bin";
    auto h1 = run_once(p1);
    auto h2 = run_once(p2);

    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool ckpt_same = slurp(p1) == slurp(p2);
    bool metrics_same = h1.size() == h2.size();
    for (std::size_t i = 0; metrics_same && i < h1.size(); ++i)
        metrics_same &= h1[i].epoch == h2[i].epoch && h1[i].split == h2[i].split && h1[i].loss == h2[i].loss &&
                        h1[i].accuracy == h2[i].accuracy;
    std::remove(p1.c_str());
    std::remove(p2.c_str());
    report("9", ckpt_same && metrics_same,
           "two same-seed runs: checkpoints byte-identical, metrics identical (wall-time field excluded)");
}

TEST_CASE("supplementary: desk-scale synthetic 6-way pipeline run") {
    // Stands in for the TREC-shaped end-to-end run while the official files
    // are absent; exercises dropout, L2, dev selection and threading at a
    // realistic size.
    auto t0 = std::chrono::steady_clock::now();
    Dataset data = six_class_task(99, 1200, 200, 400);

    ModelConfig config;
    config.task = Task::trec6;
    config.embedding_dim = 32;
    config.banks = {{3, 64}};
    config.d_mem = 64;
    config.dropout_p = 0.5;
    config.l2_lambda = 0.001;
    config.batch_size = 32;
    config.max_epochs = 6;
    config.seed = 5;
    config.threads = 4;
    config.num_classes = 6;

    TrainResult result = train(data, config);
    double acc = evaluate(result.params, config, data.test).accuracy;
    double secs = seconds_since(t0);
    char detail[160];
    std::snprintf(detail, sizeof(detail), "synthetic 6-way task (1200 train): test accuracy %.3f (>= 0.90), %.0fs",
                  acc, secs);
    std::printf("SUPPLEMENTARY: %s — %s\n", acc >= 0.90 ? "PASS" : "FAIL", detail);
    CHECK(acc >= 0.90);
}
