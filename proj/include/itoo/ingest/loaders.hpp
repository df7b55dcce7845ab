#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "itoo/core/types.hpp"

namespace itoo {

/// Binary vector file: magic `ITOOVEC1`, u32 dim, u64 count, then count x (u64 id, dim x f32),
/// all little-endian.
struct EmbeddingFile {
    std::uint32_t dim = 0;
    std::map<ItemId, std::vector<float>> vectors;
};

inline constexpr char kEmbeddingMagic[8] = {'I', 'T', 'O', 'O', 'V', 'E', 'C', '1'};

/// Throws ParseError (byte offset) on a malformed header or duplicate id, SchemaError when the
/// declared dim differs from `expected_dim` or the payload size disagrees with dim/count.
EmbeddingFile load_embeddings(const std::filesystem::path& path,
                              std::optional<std::uint32_t> expected_dim = std::nullopt);
void save_embeddings(const std::filesystem::path& path, const EmbeddingFile& file);

/// CSV `timestamp_iso8601,user_id,kind,target_id`; a header line with those names is optional.
/// Throws ParseError carrying the 1-based line number.
std::vector<InteractionEvent> load_interactions(const std::filesystem::path& path);
void save_interactions(const std::filesystem::path& path, const std::vector<InteractionEvent>& events);
std::string format_interaction_csv(const InteractionEvent& e);
InteractionEvent parse_interaction_csv(const std::string& line, std::uint64_t lineno);

/// JSON-lines metadata; each object carries "type": "item" | "ootd" | "user".
struct Metadata {
    std::vector<ItemRecord> items;
    std::vector<OotdPost> ootds;
    std::vector<UserProfile> users;
};

Metadata load_metadata(const std::filesystem::path& path);
void save_metadata(const std::filesystem::path& path, const Metadata& md);

}  // namespace itoo
