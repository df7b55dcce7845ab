#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "itoo/vecindex/hnsw.hpp"

namespace itoo {

/// Stable 64-bit mix of an item id; shard = hash % shard_count.
std::uint64_t shard_hash(ItemId id);

/// Merge per-shard hit lists by (score desc, id asc), truncated to k.
std::vector<SearchHit> merge_topk(const std::vector<std::vector<SearchHit>>& parts, std::size_t k);

/// HNSW graphs over a hash partition of the id set.
class ShardedIndex {
public:
    ShardedIndex() = default;

    static ShardedIndex build(const std::map<ItemId, std::vector<float>>& vectors, std::size_t shard_count,
                              const HnswParams& params, std::size_t expected_dim = 0);
    static ShardedIndex from_shards(std::vector<HnswIndex> shards);

    /// Queries every shard for k hits and merges. With ef >= every shard's size the
    /// result equals an exhaustive search over the union.
    std::vector<SearchHit> search(std::span<const float> query, std::size_t k,
                                  std::optional<std::size_t> ef = std::nullopt, Exec exec = Exec::serial) const;

    std::size_t shard_count() const { return shards_.size(); }
    std::size_t shard_of(ItemId id) const { return shards_.empty() ? 0 : shard_hash(id) % shards_.size(); }
    const std::vector<HnswIndex>& shards() const { return shards_; }
    std::size_t size() const;
    std::size_t dim() const;
    bool contains(ItemId id) const;

private:
    std::vector<HnswIndex> shards_;
};

}  // namespace itoo
