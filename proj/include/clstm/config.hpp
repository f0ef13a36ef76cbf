#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "clstm/conv.hpp"
#include "clstm/text_data.hpp"

namespace clstm {

enum class DropSite { word_vectors, lstm_output };

struct OptHyper {
    double lr = 1e-3;
    double rho = 0.9;
    double eps = 1e-6;
    double clip_norm = 5.0;
    bool clip_enabled = true;
};

// Every knob of a training run. Flat-JSON config files and command-line
// overrides both write into this struct; built-in defaults < config file <
// command line.
struct ModelConfig {
    Task task = Task::sst5;
    std::size_t embedding_dim = 300;
    bool trainable_embeddings = true;
    std::vector<BankSpec> banks = {{3, 150}};
    std::size_t d_mem = 150;
    double dropout_p = 0.5;
    std::set<DropSite> dropout_sites = {DropSite::word_vectors, DropSite::lstm_output};
    double l2_lambda = 0.001;
    OptHyper opt;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 30;
    std::uint64_t seed = 42;
    bool read_at_true_length = false;
    std::size_t threads = 1;
    int num_classes = 0;  // filled in from the dataset/task at train time

    std::size_t k_max() const {
        std::size_t k = 1;
        for (const auto& b : banks) k = std::max(k, b.k);
        return k;
    }
};

// Parses a comma-separated bank list: items are "k" (filter count taken from
// `default_n`) or "k:n".
std::vector<BankSpec> parse_banks(const std::string& text, std::size_t default_n);

std::string banks_to_string(const std::vector<BankSpec>& banks);

std::set<DropSite> parse_dropout_sites(const std::string& text);
std::string dropout_sites_to_string(const std::set<DropSite>& sites);

// Applies the flat key -> scalar pairs of a JSON config file. Unknown keys
// are an error so typos do not silently vanish.
void apply_config_json(ModelConfig& config, const std::string& json_text);
void load_config_file(ModelConfig& config, const std::string& path);

// Canonical flat-JSON form (also embedded in checkpoints).
std::string config_to_json(const ModelConfig& config);

}  // namespace clstm
