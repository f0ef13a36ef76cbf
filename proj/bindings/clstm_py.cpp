#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "clstm/checkpoint.hpp"
#include "clstm/gradcheck.hpp"
#include "clstm/training.hpp"

namespace py = pybind11;
using namespace clstm;
using nlohmann::json;

namespace {

py::object json_to_py(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(j.get<bool>());
        case json::value_t::number_integer: return py::int_(j.get<long long>());
        case json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
        case json::value_t::number_float: return py::float_(j.get<double>());
        case json::value_t::string: return py::str(j.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const auto& item : j) out.append(json_to_py(item));
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (auto it = j.begin(); it != j.end(); ++it) out[py::str(it.key())] = json_to_py(it.value());
            return out;
        }
        default: return py::none();
    }
}

std::string py_dict_to_json(const py::dict& d) {
    py::object dumps = py::module_::import("json").attr("dumps");
    return py::cast<std::string>(dumps(d));
}

py::dict tree_to_py(const SstNode& node) {
    py::dict out;
    out["label"] = node.label;
    if (node.is_leaf()) {
        out["token"] = node.token;
    } else {
        py::list children;
        for (const SstNode& c : node.children) children.append(tree_to_py(c));
        out["children"] = children;
    }
    return out;
}

struct PyModel {
    Checkpoint ckpt;

    py::dict evaluate(const Dataset& data, const std::string& split) const {
        if (data.vocab.id_to_token != ckpt.vocab.id_to_token)
            throw ArgumentError("evaluate: dataset vocabulary differs from the model's");
        const std::vector<Example>* examples = &data.test;
        if (split == "train")
            examples = &data.train;
        else if (split == "dev")
            examples = &data.dev;
        else if (split != "test")
            throw ArgumentError("evaluate: unknown split '" + split + "'");
        EvalResult r = clstm::evaluate(ckpt.params, ckpt.config, *examples);
        py::dict out;
        out["accuracy"] = r.accuracy;
        out["loss"] = r.mean_loss;
        out["examples"] = examples->size();
        return out;
    }
};

py::list metrics_to_py(const std::vector<Metrics>& history) {
    py::list out;
    for (const Metrics& m : history) out.append(json_to_py(json::parse(metrics_to_json(m))));
    return out;
}

}  // namespace

PYBIND11_MODULE(_clstm, m) {
    m.doc() = "C-LSTM sentence classification: n-gram convolution feeding an LSTM";

    py::register_exception<Error>(m, "ClstmError", PyExc_RuntimeError);

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("task", [](const Dataset& d) { return std::string(task_name(d.task)); })
        .def_property_readonly("num_classes", [](const Dataset& d) { return d.num_classes; })
        .def_property_readonly("train_size", [](const Dataset& d) { return d.train.size(); })
        .def_property_readonly("dev_size", [](const Dataset& d) { return d.dev.size(); })
        .def_property_readonly("test_size", [](const Dataset& d) { return d.test.size(); })
        .def_property_readonly("vocab_size", [](const Dataset& d) { return d.vocab.size(); })
        .def_property_readonly("maxlen", [](const Dataset& d) { return d.vocab.maxlen; });

    m.def(
        "load_dataset",
        [](const std::string& task, const std::string& data_dir, bool phrases, std::size_t holdout,
           std::uint64_t holdout_seed) {
            Task t = task_from_name(task);
            if (t == Task::trec6) return load_trec(data_dir, holdout, holdout_seed);
            return load_sst(data_dir, t, phrases);
        },
        py::arg("task"), py::arg("data_dir"), py::arg("phrases") = false, py::arg("holdout") = 0,
        py::arg("holdout_seed") = 42, "Load SST or TREC from a directory of official-format files");

    m.def(
        "parse_sst_tree", [](const std::string& line) { return tree_to_py(parse_sst_tree(line)); }, py::arg("line"),
        "Parse one labeled s-expression into nested dicts");

    m.def(
        "sst_roundtrip", [](const std::string& line) { return to_sexpr(parse_sst_tree(line)); }, py::arg("line"),
        "Parse and re-serialize one labeled s-expression");

    m.def(
        "parse_trec",
        [](const std::string& line) {
            Phrase p = parse_trec(line);
            return py::make_tuple(p.tokens, p.label);
        },
        py::arg("line"), "Parse one 'COARSE:fine question' line into (tokens, label)");

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("config",
                               [](const PyModel& pm) { return json_to_py(json::parse(config_to_json(pm.ckpt.config))); })
        .def_property_readonly("vocab_size", [](const PyModel& pm) { return pm.ckpt.vocab.size(); })
        .def("evaluate", &PyModel::evaluate, py::arg("dataset"), py::arg("split") = "test")
        .def(
            "save",
            [](const PyModel& pm, const std::string& path) {
                save_checkpoint(path, pm.ckpt.config, pm.ckpt.vocab, pm.ckpt.params);
            },
            py::arg("path"));

    m.def(
        "train",
        [](const Dataset& data, py::object overrides) {
            ModelConfig config;
            config.task = data.task;
            if (!overrides.is_none()) apply_config_json(config, py_dict_to_json(py::cast<py::dict>(overrides)));
            TrainResult result;
            {
                py::gil_scoped_release release;
                result = clstm::train(data, config);
            }
            PyModel pm;
            pm.ckpt.config = config;
            pm.ckpt.config.num_classes = data.num_classes;
            pm.ckpt.vocab = data.vocab;
            pm.ckpt.params = std::move(result.params);
            return py::make_tuple(std::move(pm), metrics_to_py(result.history));
        },
        py::arg("dataset"), py::arg("overrides") = py::none(),
        "Train on a loaded dataset; returns (model, metrics history)");

    m.def(
        "load_model",
        [](const std::string& path) {
            PyModel pm;
            pm.ckpt = load_checkpoint(path);
            return pm;
        },
        py::arg("path"));

    m.def(
        "gradcheck",
        [](const std::string& banks, std::size_t filters, bool frozen_embeddings, bool dropout_frozen_mask,
           bool read_at_true_length, std::uint64_t seed, const std::string& corrupt_block, double corrupt_factor) {
            GradcheckConfig gc;
            if (!banks.empty()) gc.banks = parse_banks(banks, filters);
            gc.frozen_embeddings = frozen_embeddings;
            gc.dropout_frozen_mask = dropout_frozen_mask;
            gc.read_at_true_length = read_at_true_length;
            if (seed != 0) gc.seed = seed;
            gc.corrupt_block = corrupt_block;
            gc.corrupt_factor = corrupt_factor;
            GradcheckReport report;
            {
                py::gil_scoped_release release;
                report = gradcheck(gc);
            }
            py::dict blocks;
            for (const auto& b : report.blocks) blocks[py::str(b.block)] = b.max_rel_err;
            py::dict out;
            out["pass"] = report.pass;
            out["blocks"] = blocks;
            return out;
        },
        py::arg("banks") = "", py::arg("filters") = 4, py::arg("frozen_embeddings") = false,
        py::arg("dropout_frozen_mask") = false, py::arg("read_at_true_length") = false, py::arg("seed") = 0,
        py::arg("corrupt_block") = "", py::arg("corrupt_factor") = 1.01,
        "Finite-difference check of every gradient block; returns {pass, blocks}");

    m.def(
        "read_word2vec",
        [](const std::string& path, const Dataset& data) {
            py::dict out;
            for (const auto& [token, vec] : read_word2vec_binary(path, data.vocab)) out[py::str(token)] = vec;
            return out;
        },
        py::arg("path"), py::arg("dataset"), "Read a word2vec binary file, keeping only in-vocabulary tokens");

    m.def(
        "write_word2vec",
        [](const std::string& path, const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
            write_word2vec_binary(path, entries);
        },
        py::arg("path"), py::arg("entries"), "Write (token, vector) pairs in the word2vec binary layout");
}
