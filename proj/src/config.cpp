#include "clstm/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace clstm {

using nlohmann::json;

std::vector<BankSpec> parse_banks(const std::string& text, std::size_t default_n) {
    std::vector<BankSpec> banks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        BankSpec spec;
        std::size_t colon = item.find(':');
        try {
            if (colon == std::string::npos) {
                spec.k = std::stoul(item);
                spec.n = default_n;
            } else {
                spec.k = std::stoul(item.substr(0, colon));
                spec.n = std::stoul(item.substr(colon + 1));
            }
        } catch (const std::exception&) {
            throw ArgumentError("bad bank spec '" + item + "' (expected k or k:n)");
        }
        banks.push_back(spec);
    }
    if (banks.empty()) throw ArgumentError("bank list '" + text + "' is empty");
    return banks;
}

std::string banks_to_string(const std::vector<BankSpec>& banks) {
    std::string out;
    for (const auto& b : banks) {
        if (!out.empty()) out += ",";
        out += std::to_string(b.k) + ":" + std::to_string(b.n);
    }
    return out;
}

std::set<DropSite> parse_dropout_sites(const std::string& text) {
    std::set<DropSite> sites;
    if (text == "none" || text.empty()) return sites;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "word_vectors")
            sites.insert(DropSite::word_vectors);
        else if (item == "lstm_output")
            sites.insert(DropSite::lstm_output);
        else
            throw ArgumentError("unknown dropout site '" + item + "' (word_vectors, lstm_output or none)");
    }
    return sites;
}

std::string dropout_sites_to_string(const std::set<DropSite>& sites) {
    std::string out;
    if (sites.count(DropSite::word_vectors)) out += "word_vectors";
    if (sites.count(DropSite::lstm_output)) out += std::string(out.empty() ? "" : ",") + "lstm_output";
    return out.empty() ? "none" : out;
}

void apply_config_json(ModelConfig& config, const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ArgumentError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ArgumentError("config must be a JSON object of key -> scalar pairs");

    // Filter count first so a bare "banks": "2,3,4" picks it up.
    std::size_t filters = config.banks.empty() ? 100 : config.banks.front().n;
    if (j.contains("filters")) {
        filters = j.at("filters").get<std::size_t>();
        for (auto& b : config.banks) b.n = filters;
    }

    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        try {
            if (key == "task")
                config.task = task_from_name(v.get<std::string>());
            else if (key == "embedding_dim")
                config.embedding_dim = v.get<std::size_t>();
            else if (key == "trainable_embeddings")
                config.trainable_embeddings = v.get<bool>();
            else if (key == "banks")
                config.banks = parse_banks(v.get<std::string>(), filters);
            else if (key == "filters")
                ;  // handled above
            else if (key == "mem")
                config.d_mem = v.get<std::size_t>();
            else if (key == "dropout")
                config.dropout_p = v.get<double>();
            else if (key == "dropout_sites")
                config.dropout_sites = parse_dropout_sites(v.get<std::string>());
            else if (key == "l2")
                config.l2_lambda = v.get<double>();
            else if (key == "lr")
                config.opt.lr = v.get<double>();
            else if (key == "rho")
                config.opt.rho = v.get<double>();
            else if (key == "eps")
                config.opt.eps = v.get<double>();
            else if (key == "clip_norm")
                config.opt.clip_norm = v.get<double>();
            else if (key == "clip")
                config.opt.clip_enabled = v.get<bool>();
            else if (key == "batch")
                config.batch_size = v.get<std::size_t>();
            else if (key == "epochs")
                config.max_epochs = v.get<std::size_t>();
            else if (key == "seed")
                config.seed = v.get<std::uint64_t>();
            else if (key == "read_at_true_length")
                config.read_at_true_length = v.get<bool>();
            else if (key == "threads")
                config.threads = v.get<std::size_t>();
            else if (key == "num_classes")
                config.num_classes = v.get<int>();
            else
                throw ArgumentError("unknown config key '" + key + "'");
        } catch (const json::exception& e) {
            throw ArgumentError("config key '" + key + "': " + e.what());
        }
    }

    if (config.dropout_p < 0.0 || config.dropout_p >= 1.0)
        throw ArgumentError("dropout must lie in [0, 1)");
    if (config.batch_size < 1) throw ArgumentError("batch must be >= 1");
    if (config.embedding_dim < 1) throw ArgumentError("embedding_dim must be >= 1");
    if (config.d_mem < 1) throw ArgumentError("mem must be >= 1");
}

void load_config_file(ModelConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_json(config, buf.str());
}

std::string config_to_json(const ModelConfig& config) {
    json j;
    j["task"] = task_name(config.task);
    j["embedding_dim"] = config.embedding_dim;
    j["trainable_embeddings"] = config.trainable_embeddings;
    j["banks"] = banks_to_string(config.banks);
    j["mem"] = config.d_mem;
    j["dropout"] = config.dropout_p;
    j["dropout_sites"] = dropout_sites_to_string(config.dropout_sites);
    j["l2"] = config.l2_lambda;
    j["lr"] = config.opt.lr;
    j["rho"] = config.opt.rho;
    j["eps"] = config.opt.eps;
    j["clip_norm"] = config.opt.clip_norm;
    j["clip"] = config.opt.clip_enabled;
    j["batch"] = config.batch_size;
    j["epochs"] = config.max_epochs;
    j["seed"] = config.seed;
    j["read_at_true_length"] = config.read_at_true_length;
    j["threads"] = config.threads;
    j["num_classes"] = config.num_classes;
    return j.dump();
}

}  // namespace clstm
