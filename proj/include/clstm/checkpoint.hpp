#pragma once

#include <cstdint>
#include <string>

#include "clstm/model_params.hpp"

namespace clstm {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig config;
    Vocab vocab;
    ModelParams<float> params;
};

// Layout: magic "CLSTM\0", uint16 LE format version, uint32 LE header
// length, UTF-8 JSON header (config + vocab + block manifest with name,
// rows, cols and byte offset), then raw little-endian float32 data per block
// in manifest order. The round trip is bit-exact.
void save_checkpoint(const std::string& path, const ModelConfig& config, const Vocab& vocab,
                     const ModelParams<float>& params);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace clstm
