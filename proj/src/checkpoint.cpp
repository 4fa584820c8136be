// Checkpoint layout, all integers little-endian uint32:
//
//   magic "IMEACKPT" (8 bytes)
//   version, dim, layers, heads, ffn, num_entities, num_relations, tensor_count
//   tensor_count x { name_len, name bytes, rows, cols, rows*cols float32 (row-major) }

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "imea/encoder.hpp"

namespace imea {

namespace {

constexpr char kMagic[8] = {'I', 'M', 'E', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw LoadError("truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    const auto& s = model.shape();
    out.write(kMagic, sizeof kMagic);
    put_u32(out, kVersion);
    for (int v : {s.dim, s.layers, s.heads, s.ffn, s.num_entities, s.num_relations}) {
        put_u32(out, static_cast<std::uint32_t>(v));
    }
    const auto params = model.parameters();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) {
        put_u32(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
        put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
            put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(p->value.data()[i])));
        }
    }
    if (!out) throw Error("failed writing checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("missing file: " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw LoadError(path.string() + ": not a checkpoint");
    }
    if (auto v = get_u32(in); v != kVersion) {
        throw LoadError(path.string() + ": unsupported checkpoint version " + std::to_string(v));
    }
    ModelShape s;
    s.dim = static_cast<int>(get_u32(in));
    s.layers = static_cast<int>(get_u32(in));
    s.heads = static_cast<int>(get_u32(in));
    s.ffn = static_cast<int>(get_u32(in));
    s.num_entities = static_cast<int>(get_u32(in));
    s.num_relations = static_cast<int>(get_u32(in));
    Model model(s);

    std::unordered_map<std::string, Parameter*> by_name;
    for (auto* p : model.parameters()) by_name[p->name] = p;
    const auto count = get_u32(in);
    if (count != by_name.size()) throw LoadError(path.string() + ": unexpected tensor count");
    for (std::uint32_t t = 0; t < count; ++t) {
        std::string name(get_u32(in), '\0');
        if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) throw LoadError("truncated checkpoint");
        auto it = by_name.find(name);
        if (it == by_name.end()) throw LoadError(path.string() + ": unknown tensor " + name);
        auto& value = it->second->value;
        const auto rows = get_u32(in), cols = get_u32(in);
        if (rows != value.rows() || cols != value.cols()) throw LoadError(path.string() + ": bad shape for " + name);
        for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = std::bit_cast<float>(get_u32(in));
    }
    return model;
}

void save_vocab(const AlignmentTask& task, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (std::size_t i = 0; i < task.entity_uris.size(); ++i) {
        out << "entity\t" << i << '\t' << task.entity_uris[i] << '\n';
    }
    for (std::size_t i = 0; i < task.relation_uris.size(); ++i) {
        out << "relation\t" << i << '\t' << task.relation_uris[i] << '\n';
    }
}

void check_vocab(const AlignmentTask& task, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("missing file: " + path.string());
    std::string line;
    std::size_t line_no = 0, n_ent = 0, n_rel = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed");
        const std::string kind = line.substr(0, t1);
        const auto id = std::stoul(line.substr(t1 + 1, t2 - t1 - 1));
        const std::string uri = line.substr(t2 + 1);
        const auto& uris = kind == "entity" ? task.entity_uris : task.relation_uris;
        if (id >= uris.size() || uris[id] != uri) {
            throw LoadError(path.string() + ":" + std::to_string(line_no) + ": vocabulary does not match the dataset");
        }
        ++(kind == "entity" ? n_ent : n_rel);
    }
    if (n_ent != task.entity_uris.size() || n_rel != task.relation_uris.size()) {
        throw LoadError(path.string() + ": vocabulary size does not match the dataset");
    }
}

}  // namespace imea
