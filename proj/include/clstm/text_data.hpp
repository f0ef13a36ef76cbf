#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clstm/errors.hpp"
#include "clstm/rng.hpp"

namespace clstm {

enum class Task { sst5, sst2, trec6 };

const char* task_name(Task t);
Task task_from_name(const std::string& name);
int task_num_classes(Task t);

// Node of a labeled binary sentiment tree. Leaves carry exactly one token,
// internal nodes exactly two children.
struct SstNode {
    int label = 0;
    std::string token;
    std::vector<SstNode> children;

    bool is_leaf() const { return children.empty(); }
    bool operator==(const SstNode&) const = default;
};

// Parses one PTB-style labeled s-expression, e.g. "(3 (2 It) (4 works))".
SstNode parse_sst_tree(std::string_view line);

// Canonical serialization; reparsing the result yields an identical tree.
std::string to_sexpr(const SstNode& node);

std::size_t leaf_count(const SstNode& node);

struct Phrase {
    std::vector<std::string> tokens;
    int label = 0;
};

enum class PhraseMode { sentences_only, all_phrases };

// sentences_only: the root span. all_phrases: one entry per node, pre-order,
// duplicates preserved.
std::vector<Phrase> extract_phrases(const SstNode& tree, PhraseMode mode);

// 5-way labels to binary: {0,1}->0, {3,4}->1, neutral (2) dropped.
std::vector<Phrase> binarize_sst(const std::vector<Phrase>& entries);

// Parses one "COARSE:fine question words ..." line. The coarse label maps to
// an index via the fixed order [ABBR, DESC, ENTY, HUM, LOC, NUM]; the
// question is lowercased and whitespace-tokenized.
Phrase parse_trec(std::string_view line);

extern const std::vector<std::string> kTrecCoarseLabels;

struct Vocab {
    std::unordered_map<std::string, int> token_to_id;
    std::vector<std::string> id_to_token;
    int unk_id = 0;
    std::size_t maxlen = 1;

    int id_of(const std::string& token) const;
    std::size_t size() const { return id_to_token.size(); }
};

// ASCII lowercasing; bytes outside ASCII pass through untouched, which keeps
// Latin-1 input stable.
std::string lowercase(std::string_view s);

// Vocabulary over the (lowercased) training tokens plus one reserved unk
// token at index 0; maxlen = longest training entry.
Vocab build_vocab(const std::vector<Phrase>& train_entries);

struct Example {
    std::vector<int> ids;  // length == vocab.maxlen
    int label = 0;
    std::size_t true_length = 0;  // pre-padding, capped at maxlen
};

// Length-maxlen id sequence: end-padded with unk_id, end-truncated past
// maxlen.
Example encode_pad(const std::vector<std::string>& tokens, int label, const Vocab& vocab);

struct Dataset {
    std::vector<Example> train, dev, test;
    int num_classes = 0;
    Task task = Task::sst5;
    Vocab vocab;
};

// Index batches over n examples; every index appears exactly once, the last
// batch may be short, and the shuffled order is seed-deterministic.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng, bool shuffle);

// Loads one SST split ("train", "dev" or "test") as labeled phrases.
std::vector<Phrase> load_sst_split(const std::string& dir, Task task, const std::string& split, PhraseMode mode);

// Loads one TREC split ("train", "dev" or "test"); "dev" re-derives the
// holdout from the seed-deterministic shuffle.
std::vector<Phrase> load_trec_split(const std::string& dir, const std::string& split, std::size_t holdout,
                                    std::uint64_t holdout_seed);

// Loads train.txt/dev.txt/test.txt of labeled s-expressions from `dir`.
// Phrase-mode affects the training split only; dev/test keep sentences.
Dataset load_sst(const std::string& dir, Task task, bool phrases);

// Loads TREC (train.txt or train_5500.label, test.txt or TREC_10.label).
// holdout > 0 moves that many examples from the end of a seed-deterministic
// shuffle of the training data into the dev split.
Dataset load_trec(const std::string& dir, std::size_t holdout, std::uint64_t holdout_seed);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace clstm
