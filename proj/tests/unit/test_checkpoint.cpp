#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "clstm/checkpoint.hpp"
#include "clstm/training.hpp"

using namespace clstm;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/clstm_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

Checkpoint trained_toy() {
    Dataset data = load_sst(CLSTM_FIXTURE_DIR "/sst_tiny", Task::sst5, false);
    ModelConfig config;
    config.task = Task::sst5;
    config.embedding_dim = 5;
    config.banks = {{2, 3}, {3, 2}};
    config.d_mem = 4;
    config.batch_size = 4;
    config.max_epochs = 2;
    config.seed = 55;
    config.num_classes = data.num_classes;
    TrainResult result = train(data, config);
    return Checkpoint{config, data.vocab, std::move(result.params)};
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
    Checkpoint ckpt = trained_toy();
    TempFile f1("ckpt1.bin"), f2("ckpt2.bin");

    save_checkpoint(f1.path, ckpt.config, ckpt.vocab, ckpt.params);
    Checkpoint back = load_checkpoint(f1.path);
    save_checkpoint(f2.path, back.config, back.vocab, back.params);
    CHECK(slurp(f1.path) == slurp(f2.path));

    CHECK(back.vocab.id_to_token == ckpt.vocab.id_to_token);
    CHECK(back.vocab.maxlen == ckpt.vocab.maxlen);
    CHECK(back.config.d_mem == ckpt.config.d_mem);
    CHECK(back.config.banks.size() == 2);
    CHECK(back.params.emb.table.data == ckpt.params.emb.table.data);
    CHECK(back.params.lstm.W_q.data == ckpt.params.lstm.W_q.data);
    CHECK(back.params.head.b.data == ckpt.params.head.b.data);
}

TEST_CASE("a reloaded checkpoint evaluates bit-identically") {
    Checkpoint ckpt = trained_toy();
    Dataset data = load_sst(CLSTM_FIXTURE_DIR "/sst_tiny", Task::sst5, false);
    TempFile f("ckpt_eval.bin");
    save_checkpoint(f.path, ckpt.config, ckpt.vocab, ckpt.params);
    Checkpoint back = load_checkpoint(f.path);

    EvalResult before = evaluate(ckpt.params, ckpt.config, data.test);
    EvalResult after = evaluate(back.params, back.config, data.test);
    CHECK(before.accuracy == after.accuracy);
    CHECK(before.mean_loss == after.mean_loss);
}

TEST_CASE("the checkpoint file begins with the magic bytes and version") {
    Checkpoint ckpt = trained_toy();
    TempFile f("ckpt_magic.bin");
    save_checkpoint(f.path, ckpt.config, ckpt.vocab, ckpt.params);
    std::string bytes = slurp(f.path);
    REQUIRE(bytes.size() > 12);
    CHECK(bytes.compare(0, 6, std::string("CLSTM\0", 6)) == 0);
    CHECK(static_cast<unsigned char>(bytes[6]) == kCheckpointVersion);
    CHECK(static_cast<unsigned char>(bytes[7]) == 0);
}

TEST_CASE("corrupted magic and unsupported versions are format errors") {
    Checkpoint ckpt = trained_toy();
    TempFile f("ckpt_corrupt.bin");
    save_checkpoint(f.path, ckpt.config, ckpt.vocab, ckpt.params);

    std::string bytes = slurp(f.path);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    {
        std::ofstream out(f.path, std::ios::binary);
        out.write(bad_magic.data(), static_cast<std::streamsize>(bad_magic.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(f.path), FormatError);

    std::string bad_version = bytes;
    bad_version[6] = 99;
    {
        std::ofstream out(f.path, std::ios::binary);
        out.write(bad_version.data(), static_cast<std::streamsize>(bad_version.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(f.path), FormatError);

    std::string truncated = bytes.substr(0, bytes.size() - 10);
    {
        std::ofstream out(f.path, std::ios::binary);
        out.write(truncated.data(), static_cast<std::streamsize>(truncated.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(f.path), FormatError);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), IoError);
}

TEST_CASE("metrics serialize as one JSON object per line") {
    std::vector<Metrics> history = {{1, "train", 1.5, 0.25, 0.1}, {1, "dev", 1.4, 0.5, 0.02}};
    TempFile f("metrics.jsonl");
    write_metrics_jsonl(f.path, history);
    std::ifstream in(f.path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        CHECK(line.find("\"epoch\"") != std::string::npos);
        CHECK(line.find("\"split\"") != std::string::npos);
        CHECK(line.find("\"loss\"") != std::string::npos);
        CHECK(line.find("\"accuracy\"") != std::string::npos);
        CHECK(line.find("\"seconds\"") != std::string::npos);
    }
    CHECK(lines == 2);
}
