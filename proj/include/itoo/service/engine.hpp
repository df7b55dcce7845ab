#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "itoo/core/hierarchy.hpp"
#include "itoo/core/types.hpp"
#include "itoo/ingest/image.hpp"
#include "itoo/pipeline/ootd_pipeline.hpp"
#include "itoo/pipeline/plugins.hpp"
#include "itoo/service/config.hpp"
#include "itoo/stylerec/recommender.hpp"
#include "itoo/vecindex/catalog.hpp"

namespace itoo {

template <typename T>
struct Versioned {
    std::uint64_t snapshot_version = 0;
    T value;
};

/// Append-only JSON-lines log; every append is fsync'ed before returning.
class Journal {
public:
    explicit Journal(std::filesystem::path path);
    ~Journal();
    Journal(const Journal&) = delete;
    Journal& operator=(const Journal&) = delete;

    /// Complete records in file order. A torn final line (no newline, unparsable) is cut off.
    std::vector<nlohmann::json> read_all();
    void append(const nlohmann::json& record);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

struct UploadRequest {
    UserId user_id;
    std::optional<OotdId> ootd_id;
    std::vector<std::string> hashtags;
    RasterImage image;
    std::optional<Timestamp> created_at;
};

struct UploadResult {
    std::uint64_t snapshot_version = 0;
    OotdPost ootd;
    std::vector<ItemRecord> items;
    std::vector<CropError> errors;
};

struct OotdDetail {
    OotdPost ootd;
    std::vector<ItemRecord> items;
};

struct EngineStats {
    std::uint64_t snapshot_version = 0;
    Timestamp clock{};
    std::size_t items = 0;
    std::size_t ootds = 0;
    std::size_t users = 0;
    std::size_t events = 0;
    std::size_t indexed_items = 0;
    std::size_t pending_items = 0;  // ingested since the last rebuild
};

/// All stores, the live recommender and the index catalog behind one consistent snapshot
/// version. Reads run concurrently; mutations are serialized, journaled durably, then applied.
/// Reopening a data directory replays the journal and reproduces the same state.
class Engine {
public:
    /// Loads hierarchy.tsv (optional), metadata.jsonl, {classifier,tagger,search}.vec,
    /// interactions.csv (optional) and journal.jsonl (optional) from cfg.data_dir.
    explicit Engine(EngineConfig cfg);

    const EngineConfig& config() const { return cfg_; }
    const CategoryHierarchy& hierarchy() const { return hierarchy_; }
    void set_plugins(ModelPlugins plugins);

    std::uint64_t snapshot_version() const;
    Timestamp clock() const;
    EngineStats stats() const;
    std::vector<UserId> users() const;

    Versioned<std::vector<Ranked>> feed(const UserId& u, std::size_t k) const;
    Versioned<std::vector<Ranked>> similar_ootds(const OotdId& o, std::size_t k) const;
    Versioned<std::vector<Ranked>> leaders(const UserId& u, std::size_t k) const;
    Versioned<std::vector<SearchHit>> similar_items(ItemId id, std::size_t k,
                                                    std::optional<std::size_t> ef = std::nullopt) const;
    Versioned<std::vector<SearchHit>> similar_to_vector(const std::string& super, std::span<const float> v,
                                                        std::size_t k,
                                                        std::optional<std::size_t> ef = std::nullopt) const;
    Versioned<OotdDetail> ootd_detail(const OotdId& o) const;
    Versioned<ItemRecord> item(ItemId id) const;
    Versioned<UserProfile> user(const UserId& u) const;

    /// view, like or follow; `at` defaults to the engine clock.
    Versioned<InteractionEvent> record_interaction(const UserId& u, InteractionKind kind, const std::string& target,
                                                   std::optional<Timestamp> at = std::nullopt);
    /// Becomes searchable after the next rebuild.
    Versioned<ItemId> ingest_item(ItemRecord item);
    /// Runs the inference pipeline, then stores the OOTD and its crops as new items.
    UploadResult upload_ootd(const UploadRequest& req);
    /// Rebuilds recommender state and indexes from all stores and swaps them in together.
    CatalogHandle::RebuildOutcome rebuild();

private:
    struct Snapshot {
        std::uint64_t version = 0;
        std::unique_ptr<Recommender> rec;
        std::shared_ptr<const IndexCatalog> catalog;
    };

    struct Stores {
        std::map<ItemId, ItemRecord> items;
        std::map<OotdId, OotdPost> ootds;
        std::map<UserId, UserProfile> users;
        std::vector<InteractionEvent> events;
    };

    void load_base();
    void replay(const nlohmann::json& record);
    CatalogHandle::RebuildOutcome rebuild_at(Timestamp now);
    Timestamp newest_data_time() const;
    GroupedVectors grouped_vectors(const std::map<ItemId, ItemRecord>& items) const;

    void apply_interaction(const InteractionEvent& e);
    void apply_item(const ItemRecord& item);
    void apply_ootd(const OotdPost& o, const std::vector<ItemRecord>& items);
    void validate_interaction(const InteractionEvent& e) const;

    EngineConfig cfg_;
    CategoryHierarchy hierarchy_;
    ModelPlugins plugins_;
    std::unique_ptr<Journal> journal_;

    mutable std::shared_mutex state_mu_;  // guards stores_, snap_, indexed_
    std::mutex writer_mu_;                // serializes mutations and rebuilds
    Stores stores_;
    Snapshot snap_;
    std::size_t indexed_ = 0;
};

}  // namespace itoo
