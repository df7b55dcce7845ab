#include <fstream>
#include <iterator>

#include "itoo/core/byte_io.hpp"
#include "itoo/vecindex/hnsw.hpp"

namespace itoo {

namespace {

constexpr char kMagic[8] = {'I', 'T', 'O', 'O', 'H', 'N', 'S', 'W'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void HnswIndex::save(const std::filesystem::path& path) const {
    ByteWriter w;
    w.put_bytes(kMagic, 8);
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint64_t>(params_.M);
    w.put<std::uint64_t>(params_.ef_construction);
    w.put<std::uint64_t>(params_.ef_search);
    w.put<std::uint64_t>(params_.seed);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dim()));
    w.put<std::uint64_t>(size());
    w.put<std::int32_t>(max_level_);
    w.put<std::uint32_t>(entry_);
    for (Internal i = 0; i < size(); ++i) {
        w.put<std::uint64_t>(store_.id(i));
        w.put<std::int32_t>(levels_[i]);
        w.put_span(std::span<const float>(store_.row(i), dim()));
    }
    for (Internal i = 0; i < size(); ++i) {
        for (int l = 0; l <= levels_[i]; ++l) {
            const auto adj = links(i, l);
            w.put<std::uint32_t>(static_cast<std::uint32_t>(adj.size()));
            w.put_span(adj);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write index snapshot " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
}

HnswIndex HnswIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open index snapshot " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader r(bytes);

    const auto magic = r.take(8);
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw ParseError("index snapshot: bad magic", 0);
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) {
        throw SchemaError("index snapshot: unsupported version " + std::to_string(version));
    }
    HnswIndex idx;
    idx.params_.M = r.get<std::uint64_t>();
    idx.params_.ef_construction = r.get<std::uint64_t>();
    idx.params_.ef_search = r.get<std::uint64_t>();
    idx.params_.seed = r.get<std::uint64_t>();
    const auto dim = r.get<std::uint32_t>();
    const auto n = r.get<std::uint64_t>();
    idx.max_level_ = r.get<std::int32_t>();
    idx.entry_ = r.get<std::uint32_t>();
    if (idx.params_.M < 2) throw SchemaError("index snapshot: M < 2");
    if (n > r.remaining() / (12 + 4ull * dim)) throw ParseError("index snapshot: node count exceeds file", r.offset());

    idx.store_ = FlatVectors(dim);
    idx.store_.reserve(n);
    idx.levels_.resize(n);
    idx.upper_.resize(n);
    idx.level0_.assign(n * (2 * idx.params_.M + 1), 0);
    std::vector<float> row(dim);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto id = r.get<std::uint64_t>();
        const auto level = r.get<std::int32_t>();
        if (level < 0 || level > idx.max_level_) throw SchemaError("index snapshot: node level out of range");
        r.get_into(std::span<float>(row));
        idx.store_.add_normalized(id, row);
        idx.levels_[i] = level;
        idx.upper_[i].resize(static_cast<std::size_t>(level));
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        for (int l = 0; l <= idx.levels_[i]; ++l) {
            const auto count = r.get<std::uint32_t>();
            if (count > idx.max_degree(l)) throw SchemaError("index snapshot: degree bound exceeded");
            std::vector<Internal> adj(count);
            r.get_into(std::span<Internal>(adj));
            idx.set_links(static_cast<Internal>(i), l, adj);
        }
    }
    if (r.remaining() != 0) throw ParseError("index snapshot: trailing bytes", r.offset());
    if (n == 0) idx.max_level_ = -1;
    idx.finish_load();
    const auto violations = idx.validate();
    if (!violations.empty()) throw SchemaError("index snapshot invalid: " + violations.front());
    return idx;
}

}  // namespace itoo
