#include "itoo/vecindex/sharded.hpp"

#include <algorithm>

#include "itoo/core/errors.hpp"

namespace itoo {

std::uint64_t shard_hash(ItemId id) {
    // splitmix64 finalizer
    std::uint64_t z = id + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<SearchHit> merge_topk(const std::vector<std::vector<SearchHit>>& parts, std::size_t k) {
    std::vector<SearchHit> all;
    for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    std::sort(all.begin(), all.end(), ranks_before);
    if (all.size() > k) all.resize(k);
    return all;
}

ShardedIndex ShardedIndex::build(const std::map<ItemId, std::vector<float>>& vectors, std::size_t shard_count,
                                 const HnswParams& params, std::size_t expected_dim) {
    if (shard_count == 0) throw ContractError("shard count must be at least 1");
    std::size_t dim = expected_dim;
    if (dim == 0 && !vectors.empty()) dim = vectors.begin()->second.size();
    std::vector<std::map<ItemId, std::vector<float>>> parts(shard_count);
    for (const auto& [id, v] : vectors) parts[shard_hash(id) % shard_count].emplace(id, v);

    ShardedIndex s;
    s.shards_.reserve(shard_count);
    for (const auto& part : parts) s.shards_.push_back(HnswIndex::build(part, params, dim));
    return s;
}

ShardedIndex ShardedIndex::from_shards(std::vector<HnswIndex> shards) {
    ShardedIndex s;
    s.shards_ = std::move(shards);
    for (std::size_t i = 0; i < s.shards_.size(); ++i) {
        for (ItemId id : s.shards_[i].vectors().ids()) {
            if (s.shard_of(id) != i) {
                throw SchemaError("item " + std::to_string(id) + " stored in shard " + std::to_string(i) +
                                  " but hashes to shard " + std::to_string(s.shard_of(id)));
            }
        }
    }
    return s;
}

std::vector<SearchHit> ShardedIndex::search(std::span<const float> query, std::size_t k,
                                            std::optional<std::size_t> ef, Exec exec) const {
    std::vector<std::vector<SearchHit>> parts(shards_.size());
    const auto n = static_cast<std::int64_t>(shards_.size());
    if (exec == Exec::serial || n < 2) {
        for (std::int64_t i = 0; i < n; ++i) parts[i] = shards_[i].search(query, k, ef);
    } else {
        for (const auto& s : shards_) {
            if (!s.empty() && s.dim() != query.size()) {
                throw SchemaError("query dimension " + std::to_string(query.size()) + " != index dimension " +
                                  std::to_string(s.dim()));
            }
        }
#pragma omp parallel for schedule(static, 1)
        for (std::int64_t i = 0; i < n; ++i) parts[i] = shards_[i].search(query, k, ef);
    }
    return merge_topk(parts, k);
}

std::size_t ShardedIndex::size() const {
    std::size_t n = 0;
    for (const auto& s : shards_) n += s.size();
    return n;
}

std::size_t ShardedIndex::dim() const {
    for (const auto& s : shards_) {
        if (!s.empty()) return s.dim();
    }
    return 0;
}

bool ShardedIndex::contains(ItemId id) const {
    return !shards_.empty() && shards_[shard_of(id)].contains(id);
}

}  // namespace itoo
