#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "clstm/embeddings.hpp"

namespace clstm {

namespace {

constexpr std::size_t kMaxTokenBytes = 4096;

std::size_t offset_of(std::istream& in) {
    auto pos = in.tellg();
    return pos < 0 ? 0 : static_cast<std::size_t>(pos);
}

}  // namespace

std::map<std::string, std::vector<float>> read_word2vec_binary(const std::string& path, const Vocab& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string header;
    if (!std::getline(in, header)) throw FormatError("missing header line", 0);
    std::istringstream hs(header);
    long long count = -1, dim = -1;
    std::string extra;
    if (!(hs >> count >> dim) || (hs >> extra) || count < 0)
        throw FormatError("malformed header '" + header + "'", 0);
    if (dim <= 0) throw FormatError("non-positive dimension " + std::to_string(dim), 0);

    std::map<std::string, std::vector<float>> out;
    for (long long w = 0; w < count; ++w) {
        std::string token;
        char c;
        while (true) {
            std::size_t offset = offset_of(in);
            if (!in.get(c))
                throw FormatError("truncated file while reading token " + std::to_string(w), offset);
            if (c == ' ') break;
            token.push_back(c);
            if (token.size() > kMaxTokenBytes)
                throw FormatError("token longer than " + std::to_string(kMaxTokenBytes) + " bytes", offset);
        }
        std::vector<float> vec(static_cast<std::size_t>(dim));
        std::size_t vec_offset = offset_of(in);
        if (!in.read(reinterpret_cast<char*>(vec.data()), dim * static_cast<long long>(sizeof(float))))
            throw FormatError("truncated vector for token '" + token + "'", vec_offset);
        // Tolerate an optional record-terminating newline.
        if (in.peek() == '\n') in.get(c);

        std::string low = lowercase(token);
        if (vocab.token_to_id.count(low)) out.emplace(std::move(low), std::move(vec));
    }
    return out;
}

void write_word2vec_binary(const std::string& path,
                           const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    std::size_t dim = entries.empty() ? 0 : entries.front().second.size();
    out << entries.size() << " " << dim << "\n";
    for (const auto& [token, vec] : entries) {
        if (vec.size() != dim) throw ArgumentError("write_word2vec_binary: ragged vector for '" + token + "'");
        out << token << ' ';
        out.write(reinterpret_cast<const char*>(vec.data()),
                  static_cast<std::streamsize>(vec.size() * sizeof(float)));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

std::map<std::string, std::vector<float>> read_vectors_text(const std::string& path, const Vocab& vocab) {
    std::map<std::string, std::vector<float>> out;
    for (const std::string& line : read_lines(path)) {
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) continue;
        std::vector<float> vec;
        float v;
        while (ls >> v) vec.push_back(v);
        std::string low = lowercase(token);
        if (vocab.token_to_id.count(low)) out.emplace(std::move(low), std::move(vec));
    }
    return out;
}

}  // namespace clstm
