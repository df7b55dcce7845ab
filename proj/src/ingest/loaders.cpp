#include "itoo/ingest/loaders.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "itoo/core/errors.hpp"
#include "itoo/ingest/json_codec.hpp"

namespace itoo {

namespace {

constexpr std::uint64_t kHeaderBytes = 8 + 4 + 8;

template <typename T>
void put_le(std::string& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(const unsigned char* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

}  // namespace

EmbeddingFile load_embeddings(const std::filesystem::path& path, std::optional<std::uint32_t> expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open embedding file " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

    if (bytes.size() < kHeaderBytes) throw ParseError("embedding file: truncated header", bytes.size());
    if (std::memcmp(p, kEmbeddingMagic, 8) != 0) throw ParseError("embedding file: bad magic", 0);
    EmbeddingFile out;
    out.dim = get_le<std::uint32_t>(p + 8);
    const auto count = get_le<std::uint64_t>(p + 12);
    if (expected_dim && out.dim != *expected_dim) {
        throw SchemaError("embedding file: declared dim " + std::to_string(out.dim) + " != configured " +
                          std::to_string(*expected_dim));
    }
    const std::uint64_t record_bytes = 8 + 4ull * out.dim;
    const std::uint64_t payload = bytes.size() - kHeaderBytes;
    if (count > payload / record_bytes || payload != count * record_bytes) {
        throw SchemaError("embedding file: payload of " + std::to_string(payload) + " bytes does not hold " +
                          std::to_string(count) + " records of dim " + std::to_string(out.dim));
    }

    std::uint64_t off = kHeaderBytes;
    for (std::uint64_t r = 0; r < count; ++r) {
        const auto id = get_le<std::uint64_t>(p + off);
        std::vector<float> v(out.dim);
        for (std::uint32_t k = 0; k < out.dim; ++k) {
            const auto raw = get_le<std::uint32_t>(p + off + 8 + 4ull * k);
            std::memcpy(&v[k], &raw, 4);
        }
        if (!out.vectors.emplace(id, std::move(v)).second) {
            throw ParseError("embedding file: duplicate item id " + std::to_string(id), off);
        }
        off += record_bytes;
    }
    return out;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingFile& file) {
    std::string buf(kEmbeddingMagic, 8);
    put_le<std::uint32_t>(buf, file.dim);
    put_le<std::uint64_t>(buf, file.vectors.size());
    for (const auto& [id, v] : file.vectors) {
        if (v.size() != file.dim) {
            throw SchemaError("save_embeddings: item " + std::to_string(id) + " has dim " + std::to_string(v.size()));
        }
        put_le<std::uint64_t>(buf, id);
        for (float x : v) {
            std::uint32_t raw;
            std::memcpy(&raw, &x, 4);
            put_le<std::uint32_t>(buf, raw);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write embedding file " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

InteractionEvent parse_interaction_csv(const std::string& line, std::uint64_t lineno) {
    const auto f = split_csv(line);
    if (f.size() != 4) throw ParseError("interactions: expected 4 fields", lineno);
    InteractionEvent e;
    try {
        e.timestamp = parse_iso8601(f[0]);
    } catch (const ContractError& err) {
        throw ParseError(std::string("interactions: ") + err.what(), lineno);
    }
    auto kind = parse_interaction_kind(f[2]);
    if (!kind) throw ParseError("interactions: unknown kind '" + f[2] + "'", lineno);
    if (f[1].empty() || f[3].empty()) throw ParseError("interactions: empty id", lineno);
    e.user_id = f[1];
    e.kind = *kind;
    e.target_id = f[3];
    return e;
}

std::string format_interaction_csv(const InteractionEvent& e) {
    return format_iso8601(e.timestamp) + "," + e.user_id + "," + std::string(to_string(e.kind)) + "," + e.target_id;
}

std::vector<InteractionEvent> load_interactions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open interaction log " + path.string());
    std::vector<InteractionEvent> out;
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("timestamp", 0) == 0) continue;
        out.push_back(parse_interaction_csv(line, lineno));
    }
    return out;
}

void save_interactions(const std::filesystem::path& path, const std::vector<InteractionEvent>& events) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write interaction log " + path.string());
    out << "timestamp_iso8601,user_id,kind,target_id\n";
    for (const auto& e : events) out << format_interaction_csv(e) << '\n';
}

Metadata load_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metadata file " + path.string());
    Metadata md;
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto type = j.value("type", "");
            if (type == "item") {
                md.items.push_back(item_from_json(j));
            } else if (type == "ootd") {
                md.ootds.push_back(ootd_from_json(j));
            } else if (type == "user") {
                md.users.push_back(user_from_json(j));
            } else {
                throw ContractError("unknown record type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("metadata: ") + e.what(), lineno);
        } catch (const ContractError& e) {
            throw ParseError(std::string("metadata: ") + e.what(), lineno);
        }
    }
    return md;
}

void save_metadata(const std::filesystem::path& path, const Metadata& md) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write metadata file " + path.string());
    for (const auto& u : md.users) out << user_to_json(u).dump() << '\n';
    for (const auto& i : md.items) out << item_to_json(i, false).dump() << '\n';
    for (const auto& o : md.ootds) out << ootd_to_json(o).dump() << '\n';
}

}  // namespace itoo
