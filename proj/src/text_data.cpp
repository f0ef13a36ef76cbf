#include "clstm/text_data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

namespace clstm {

const char* task_name(Task t) {
    switch (t) {
        case Task::sst5: return "sst5";
        case Task::sst2: return "sst2";
        case Task::trec6: return "trec6";
    }
    return "?";
}

Task task_from_name(const std::string& name) {
    if (name == "sst5") return Task::sst5;
    if (name == "sst2") return Task::sst2;
    if (name == "trec6") return Task::trec6;
    throw ArgumentError("unknown task '" + name + "' (expected sst5, sst2 or trec6)");
}

int task_num_classes(Task t) {
    switch (t) {
        case Task::sst5: return 5;
        case Task::sst2: return 2;
        case Task::trec6: return 6;
    }
    return 0;
}

namespace {

struct SexprParser {
    std::string_view s;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }

    char peek() {
        if (pos >= s.size()) fail("unexpected end of input (unbalanced parentheses)");
        return s[pos];
    }

    void expect(char c) {
        if (pos >= s.size() || s[pos] != c) fail(std::string("expected '") + c + "'");
        ++pos;
    }

    SstNode parse_node() {
        skip_ws();
        expect('(');
        skip_ws();

        std::size_t label_start = pos;
        while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && s[pos] != '(' && s[pos] != ')') ++pos;
        std::string_view label_text = s.substr(label_start, pos - label_start);
        if (label_text.empty()) {
            pos = label_start;
            fail("missing node label");
        }
        int label = 0;
        for (char c : label_text) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                pos = label_start;
                fail("non-integer label '" + std::string(label_text) + "'");
            }
            label = label * 10 + (c - '0');
        }
        if (label < 0 || label > 4) {
            pos = label_start;
            fail("label " + std::to_string(label) + " outside 0-4");
        }

        SstNode node;
        node.label = label;
        skip_ws();
        if (peek() == '(') {
            while (peek() == '(') {
                node.children.push_back(parse_node());
                skip_ws();
            }
            if (node.children.size() != 2) {
                fail("internal node has " + std::to_string(node.children.size()) + " children, expected 2");
            }
        } else {
            std::size_t tok_start = pos;
            while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && s[pos] != '(' && s[pos] != ')') ++pos;
            node.token.assign(s.substr(tok_start, pos - tok_start));
            if (node.token.empty()) {
                pos = tok_start;
                fail("leaf without token");
            }
            skip_ws();
        }
        expect(')');
        return node;
    }
};

}  // namespace

SstNode parse_sst_tree(std::string_view line) {
    SexprParser p{line};
    SstNode root = p.parse_node();
    p.skip_ws();
    if (p.pos != line.size()) throw ParseError("trailing characters after tree", p.pos);
    return root;
}

std::string to_sexpr(const SstNode& node) {
    std::string out = "(" + std::to_string(node.label);
    if (node.is_leaf()) {
        out += " " + node.token;
    } else {
        for (const SstNode& c : node.children) out += " " + to_sexpr(c);
    }
    out += ")";
    return out;
}

std::size_t leaf_count(const SstNode& node) {
    if (node.is_leaf()) return 1;
    std::size_t n = 0;
    for (const SstNode& c : node.children) n += leaf_count(c);
    return n;
}

namespace {

void collect_leaves(const SstNode& node, std::vector<std::string>& out) {
    if (node.is_leaf()) {
        out.push_back(node.token);
        return;
    }
    for (const SstNode& c : node.children) collect_leaves(c, out);
}

void collect_phrases(const SstNode& node, std::vector<Phrase>& out) {
    Phrase p;
    collect_leaves(node, p.tokens);
    p.label = node.label;
    out.push_back(std::move(p));
    for (const SstNode& c : node.children) collect_phrases(c, out);
}

}  // namespace

std::vector<Phrase> extract_phrases(const SstNode& tree, PhraseMode mode) {
    std::vector<Phrase> out;
    if (mode == PhraseMode::sentences_only) {
        Phrase p;
        collect_leaves(tree, p.tokens);
        p.label = tree.label;
        out.push_back(std::move(p));
    } else {
        collect_phrases(tree, out);
    }
    return out;
}

std::vector<Phrase> binarize_sst(const std::vector<Phrase>& entries) {
    std::vector<Phrase> out;
    out.reserve(entries.size());
    for (const Phrase& p : entries) {
        if (p.label == 2) continue;
        Phrase q = p;
        q.label = p.label < 2 ? 0 : 1;
        out.push_back(std::move(q));
    }
    return out;
}

const std::vector<std::string> kTrecCoarseLabels = {"ABBR", "DESC", "ENTY", "HUM", "LOC", "NUM"};

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

Phrase parse_trec(std::string_view line) {
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError("missing ':' after coarse label", line.size());
    std::string coarse(line.substr(0, colon));
    auto it = std::find(kTrecCoarseLabels.begin(), kTrecCoarseLabels.end(), coarse);
    if (it == kTrecCoarseLabels.end()) throw ParseError("unknown coarse label '" + coarse + "'", 0);

    // Fine label runs up to the first space; the question is the rest.
    std::size_t space = line.find(' ', colon);
    std::string question = space == std::string_view::npos ? std::string() : lowercase(line.substr(space + 1));

    Phrase p;
    p.label = static_cast<int>(it - kTrecCoarseLabels.begin());
    std::size_t i = 0;
    while (i < question.size()) {
        while (i < question.size() && (question[i] == ' ' || question[i] == '\t' || question[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < question.size() && question[i] != ' ' && question[i] != '\t' && question[i] != '\r') ++i;
        if (i > start) p.tokens.push_back(question.substr(start, i - start));
    }
    if (p.tokens.empty()) throw ParseError("question has no tokens", colon);
    return p;
}

int Vocab::id_of(const std::string& token) const {
    auto it = token_to_id.find(lowercase(token));
    return it == token_to_id.end() ? unk_id : it->second;
}

Vocab build_vocab(const std::vector<Phrase>& train_entries) {
    if (train_entries.empty()) throw ArgumentError("build_vocab: empty training corpus");
    Vocab v;
    v.unk_id = 0;
    v.id_to_token.push_back("<unk>");
    v.token_to_id["<unk>"] = 0;
    v.maxlen = 1;
    for (const Phrase& p : train_entries) {
        v.maxlen = std::max(v.maxlen, p.tokens.size());
        for (const std::string& tok : p.tokens) {
            std::string low = lowercase(tok);
            if (v.token_to_id.emplace(low, static_cast<int>(v.id_to_token.size())).second) {
                v.id_to_token.push_back(std::move(low));
            }
        }
    }
    return v;
}

Example encode_pad(const std::vector<std::string>& tokens, int label, const Vocab& vocab) {
    if (tokens.empty()) throw ArgumentError("encode_pad: empty token list");
    Example ex;
    ex.label = label;
    ex.true_length = std::min(tokens.size(), vocab.maxlen);
    ex.ids.assign(vocab.maxlen, vocab.unk_id);
    for (std::size_t t = 0; t < ex.true_length; ++t) ex.ids[t] = vocab.id_of(tokens[t]);
    return ex;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng, bool shuffle_order) {
    if (batch_size < 1) throw ArgumentError("make_batches: batch_size must be >= 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t(0));
    if (shuffle_order) shuffle(order, rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        std::size_t end = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

namespace {

std::vector<Phrase> sst_entries(const std::vector<std::string>& lines, PhraseMode mode) {
    std::vector<Phrase> out;
    for (const std::string& line : lines) {
        SstNode tree = parse_sst_tree(line);
        for (Phrase& p : extract_phrases(tree, mode)) out.push_back(std::move(p));
    }
    return out;
}

std::vector<Example> encode_all(const std::vector<Phrase>& entries, const Vocab& vocab) {
    std::vector<Example> out;
    out.reserve(entries.size());
    for (const Phrase& p : entries) out.push_back(encode_pad(p.tokens, p.label, vocab));
    return out;
}

std::string pick_file(const std::string& dir, std::initializer_list<const char*> names) {
    for (const char* name : names) {
        std::string path = dir + "/" + name;
        if (std::ifstream(path).good()) return path;
    }
    std::string tried;
    for (const char* name : names) tried += std::string(tried.empty() ? "" : ", ") + dir + "/" + name;
    throw IoError("no input file found (tried " + tried + ")");
}

}  // namespace

std::vector<Phrase> load_sst_split(const std::string& dir, Task task, const std::string& split, PhraseMode mode) {
    if (task != Task::sst5 && task != Task::sst2) throw ArgumentError("load_sst: task must be sst5 or sst2");
    if (split != "train" && split != "dev" && split != "test")
        throw ArgumentError("load_sst_split: unknown split '" + split + "'");
    auto entries = sst_entries(read_lines(pick_file(dir, {(split + ".txt").c_str()})), mode);
    if (task == Task::sst2) entries = binarize_sst(entries);
    return entries;
}

std::vector<Phrase> load_trec_split(const std::string& dir, const std::string& split, std::size_t holdout,
                                    std::uint64_t holdout_seed) {
    if (split == "test") {
        std::vector<Phrase> out;
        for (const std::string& line : read_lines(pick_file(dir, {"test.txt", "TREC_10.label"})))
            out.push_back(parse_trec(line));
        return out;
    }
    if (split != "train" && split != "dev")
        throw ArgumentError("load_trec_split: unknown split '" + split + "'");
    if (split == "dev" && holdout == 0)
        throw ArgumentError("load_trec_split: the dev split only exists with a holdout > 0");

    std::vector<Phrase> train_entries;
    for (const std::string& line : read_lines(pick_file(dir, {"train.txt", "train_5500.label"})))
        train_entries.push_back(parse_trec(line));
    if (holdout == 0) return train_entries;
    if (holdout >= train_entries.size())
        throw ArgumentError("load_trec_split: holdout " + std::to_string(holdout) + " >= training size " +
                            std::to_string(train_entries.size()));
    Rng rng(holdout_seed);
    shuffle(train_entries, rng);
    std::vector<Phrase> dev_entries(train_entries.end() - static_cast<std::ptrdiff_t>(holdout), train_entries.end());
    train_entries.resize(train_entries.size() - holdout);
    return split == "dev" ? dev_entries : train_entries;
}

Dataset load_sst(const std::string& dir, Task task, bool phrases) {
    auto train_entries =
        load_sst_split(dir, task, "train", phrases ? PhraseMode::all_phrases : PhraseMode::sentences_only);
    auto dev_entries = load_sst_split(dir, task, "dev", PhraseMode::sentences_only);
    auto test_entries = load_sst_split(dir, task, "test", PhraseMode::sentences_only);

    Dataset d;
    d.task = task;
    d.num_classes = task_num_classes(task);
    d.vocab = build_vocab(train_entries);
    d.train = encode_all(train_entries, d.vocab);
    d.dev = encode_all(dev_entries, d.vocab);
    d.test = encode_all(test_entries, d.vocab);
    return d;
}

Dataset load_trec(const std::string& dir, std::size_t holdout, std::uint64_t holdout_seed) {
    auto train_entries = load_trec_split(dir, "train", holdout, holdout_seed);
    auto test_entries = load_trec_split(dir, "test", 0, 0);
    std::vector<Phrase> dev_entries;
    if (holdout > 0) dev_entries = load_trec_split(dir, "dev", holdout, holdout_seed);

    Dataset d;
    d.task = Task::trec6;
    d.num_classes = task_num_classes(Task::trec6);
    d.vocab = build_vocab(train_entries);
    d.train = encode_all(train_entries, d.vocab);
    d.dev = encode_all(dev_entries, d.vocab);
    d.test = encode_all(test_entries, d.vocab);
    return d;
}

}  // namespace clstm
