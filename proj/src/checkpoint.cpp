#include "clstm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "clstm/config.hpp"

namespace clstm {

using nlohmann::json;

namespace {

constexpr char kMagic[6] = {'C', 'L', 'S', 'T', 'M', '\0'};

static_assert(sizeof(float) == 4, "checkpoint format assumes 32-bit floats");

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config, const Vocab& vocab,
                     const ModelParams<float>& params) {
    json manifest = json::array();
    std::uint64_t offset = 0;
    for_each_block(params, [&](const std::string& name, const Matrix<float>& block) {
        manifest.push_back({{"name", name},
                            {"rows", block.rows},
                            {"cols", block.cols},
                            {"offset", offset}});
        offset += block.size() * sizeof(float);
    });

    json header;
    header["config"] = json::parse(config_to_json(config));
    header["vocab"] = {{"id_to_token", vocab.id_to_token}, {"unk_id", vocab.unk_id}, {"maxlen", vocab.maxlen}};
    header["blocks"] = manifest;
    std::string header_text = header.dump();

    std::string prefix;
    prefix.append(kMagic, sizeof(kMagic));
    put_u16(prefix, kCheckpointVersion);
    put_u32(prefix, static_cast<std::uint32_t>(header_text.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for_each_block(params, [&](const std::string&, const Matrix<float>& block) {
        out.write(reinterpret_cast<const char*>(block.data.data()),
                  static_cast<std::streamsize>(block.size() * sizeof(float)));
    });
    if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char magic[6];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("not a CLSTM checkpoint (bad magic)", 0);
    unsigned char vbuf[2];
    if (!in.read(reinterpret_cast<char*>(vbuf), 2)) throw FormatError("truncated version field", 6);
    std::uint16_t version = static_cast<std::uint16_t>(vbuf[0] | (vbuf[1] << 8));
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version), 6);
    unsigned char lbuf[4];
    if (!in.read(reinterpret_cast<char*>(lbuf), 4)) throw FormatError("truncated header length", 8);
    std::uint32_t header_len = 0;
    for (int i = 0; i < 4; ++i) header_len |= static_cast<std::uint32_t>(lbuf[i]) << (8 * i);

    std::string header_text(header_len, '\0');
    if (!in.read(header_text.data(), header_len)) throw FormatError("truncated JSON header", 12);
    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("header is not valid JSON: ") + e.what(), 12);
    }

    Checkpoint ckpt;
    try {
        apply_config_json(ckpt.config, header.at("config").dump());
        const json& v = header.at("vocab");
        ckpt.vocab.id_to_token = v.at("id_to_token").get<std::vector<std::string>>();
        ckpt.vocab.unk_id = v.at("unk_id").get<int>();
        ckpt.vocab.maxlen = v.at("maxlen").get<std::size_t>();
        for (std::size_t i = 0; i < ckpt.vocab.id_to_token.size(); ++i)
            ckpt.vocab.token_to_id[ckpt.vocab.id_to_token[i]] = static_cast<int>(i);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad checkpoint header: ") + e.what(), 12);
    }

    // Shape the parameter blocks from the config, then fill them from the
    // manifest; any disagreement is a format error.
    Rng dummy(0);
    ckpt.params = init_params<float>(ckpt.config, ckpt.vocab, {}, dummy);
    ckpt.params.emb.trainable = ckpt.config.trainable_embeddings;

    std::size_t blob_start = 12 + header_len;
    const json& manifest = header.at("blocks");
    std::size_t idx = 0;
    for_each_block(ckpt.params, [&](const std::string& name, Matrix<float>& block) {
        if (idx >= manifest.size()) throw FormatError("manifest missing block '" + name + "'", 12);
        const json& entry = manifest.at(idx++);
        if (entry.at("name").get<std::string>() != name || entry.at("rows").get<std::size_t>() != block.rows ||
            entry.at("cols").get<std::size_t>() != block.cols)
            throw FormatError("manifest entry " + entry.dump() + " does not match expected block '" + name + "' " +
                                  block.shape_str(),
                              12);
        std::size_t offset = blob_start + entry.at("offset").get<std::size_t>();
        in.seekg(static_cast<std::streamoff>(offset));
        if (!in.read(reinterpret_cast<char*>(block.data.data()),
                     static_cast<std::streamsize>(block.size() * sizeof(float))))
            throw FormatError("truncated data for block '" + name + "'", offset);
    });
    if (idx != manifest.size()) throw FormatError("manifest has extra blocks", 12);
    return ckpt;
}

}  // namespace clstm
