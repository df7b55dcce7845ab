#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "itoo/core/hierarchy.hpp"
#include "itoo/core/timeutil.hpp"

namespace itoo {

using ItemId = std::uint64_t;
using OotdId = std::string;
using UserId = std::string;

/// Dimensions of the three item representations concatenated into an item vector.
struct EmbeddingDims {
    std::size_t classifier = 32;
    std::size_t tagger = 32;
    std::size_t search = 128;

    std::size_t item_vector() const { return classifier + tagger + search; }
};

/// One (group, value) attribute tag, e.g. ("sleeve", "long").
using AttributeTag = std::pair<std::string, std::string>;

struct ItemRecord {
    ItemId item_id = 0;
    std::string sub_category;
    std::string color_tag;
    std::set<AttributeTag> attribute_tags;
    std::vector<float> classifier_embedding;
    std::vector<float> tagger_embedding;
    std::vector<float> search_embedding;
};

/// Throws SchemaError/ContractError when the record breaks its invariants.
void validate_item(const ItemRecord& item, const CategoryHierarchy& h, const EmbeddingDims& dims);

/// concat(classifier, tagger, search) in double precision.
std::vector<double> item_vector(const ItemRecord& item);

struct OotdPost {
    OotdId ootd_id;
    UserId uploader_id;
    std::vector<ItemId> item_ids;
    std::set<std::string> hashtags;
    Timestamp created_at{};
};

/// Lowercases hashtags and strips a leading '#'. Throws ContractError on an empty item list.
OotdPost make_ootd(OotdId id, UserId uploader, std::vector<ItemId> items,
                   const std::vector<std::string>& raw_hashtags, Timestamp created_at);

std::string normalize_tag(std::string_view tag);

enum class InteractionKind { view, like, upload, follow };

std::string_view to_string(InteractionKind k);
std::optional<InteractionKind> parse_interaction_kind(std::string_view s);

struct InteractionEvent {
    Timestamp timestamp{};
    UserId user_id;
    InteractionKind kind = InteractionKind::view;
    std::string target_id;  // an OOTD id, or a user id for follow events

    bool operator==(const InteractionEvent&) const = default;
};

struct Demographics {
    std::string gender;
    int birth_year = 0;
};

struct RecentInteraction {
    OotdId ootd_id;
    InteractionKind kind = InteractionKind::view;
    Timestamp timestamp{};
};

struct UserProfile {
    UserId user_id;
    Demographics demographics;
    std::set<std::string> preference_tags;
    std::set<UserId> follows;
    std::vector<RecentInteraction> recent_interactions;  // newest first
};

/// Throws ContractError on self-follow or unsorted recent interactions.
void validate_user(const UserProfile& u);

/// Inserts keeping newest-first order; equal timestamps keep insertion order (newer insert first).
void push_recent(UserProfile& u, RecentInteraction r);

}  // namespace itoo
