#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "itoo/core/timeutil.hpp"
#include "itoo/vecindex/sharded.hpp"

namespace itoo {

struct CatalogConfig {
    HnswParams hnsw;
    std::size_t shards = 1;
    std::size_t dim = 128;
};

using GroupedVectors = std::map<std::string, std::map<ItemId, std::vector<float>>>;

/// One live index per super-category.
class IndexCatalog {
public:
    struct Entry {
        std::shared_ptr<const ShardedIndex> index;
        Timestamp built_at{};
    };

    const Entry* find(const std::string& super) const;
    std::vector<SearchHit> search(const std::string& super, std::span<const float> query, std::size_t k,
                                  std::optional<std::size_t> ef = std::nullopt) const;
    const std::map<std::string, Entry>& entries() const { return entries_; }
    std::uint64_t version() const { return version_; }
    std::size_t total_size() const;

    void set(const std::string& super, Entry e) { entries_[super] = std::move(e); }
    void set_version(std::uint64_t v) { version_ = v; }

private:
    std::map<std::string, Entry> entries_;
    std::uint64_t version_ = 0;
};

/// Builds a fresh index for every super-category in `grouped` (in parallel across
/// super-categories); categories absent from `grouped` keep their old index. Throws
/// BuildError on any failure, leaving `old` untouched.
IndexCatalog rebuild_catalog(const IndexCatalog& old, const GroupedVectors& grouped, const CatalogConfig& cfg,
                             Timestamp now);

/// Holder giving readers a consistent catalog while rebuilds swap in replacements.
class CatalogHandle {
public:
    struct RebuildOutcome {
        bool ok = false;
        std::string error;
        std::vector<ItemId> rejected_ids;
        std::uint64_t version = 0;
    };

    CatalogHandle() : current_(std::make_shared<const IndexCatalog>()) {}

    std::shared_ptr<const IndexCatalog> current() const;
    void replace(std::shared_ptr<const IndexCatalog> next);

    /// Builds off-line and swaps on success; on failure the live catalog is unchanged.
    RebuildOutcome rebuild(const GroupedVectors& grouped, const CatalogConfig& cfg, Timestamp now);

private:
    mutable std::mutex swap_mutex_;
    std::mutex rebuild_mutex_;
    std::shared_ptr<const IndexCatalog> current_;
};

}  // namespace itoo
