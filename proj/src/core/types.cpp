#include "itoo/core/types.hpp"

#include <algorithm>
#include <cctype>

#include "itoo/core/errors.hpp"
#include "itoo/core/vecmath.hpp"

namespace itoo {

void validate_item(const ItemRecord& item, const CategoryHierarchy& h, const EmbeddingDims& dims) {
    const auto id = std::to_string(item.item_id);
    if (!h.has_sub(item.sub_category)) {
        throw ContractError("item " + id + ": unknown sub-category '" + item.sub_category + "'");
    }
    auto check = [&](const std::vector<float>& v, std::size_t want, const char* what) {
        if (v.size() != want) {
            throw SchemaError("item " + id + ": " + what + " dimension " + std::to_string(v.size()) +
                              " != configured " + std::to_string(want));
        }
        if (!all_finite(std::span<const float>(v))) {
            throw SchemaError("item " + id + ": non-finite " + what + " component");
        }
    };
    check(item.classifier_embedding, dims.classifier, "classifier embedding");
    check(item.tagger_embedding, dims.tagger, "tagger embedding");
    check(item.search_embedding, dims.search, "search embedding");
}

std::vector<double> item_vector(const ItemRecord& item) {
    std::vector<double> v;
    v.reserve(item.classifier_embedding.size() + item.tagger_embedding.size() +
              item.search_embedding.size());
    v.insert(v.end(), item.classifier_embedding.begin(), item.classifier_embedding.end());
    v.insert(v.end(), item.tagger_embedding.begin(), item.tagger_embedding.end());
    v.insert(v.end(), item.search_embedding.begin(), item.search_embedding.end());
    return v;
}

std::string normalize_tag(std::string_view tag) {
    while (!tag.empty() && (tag.front() == '#' || std::isspace(static_cast<unsigned char>(tag.front())))) {
        tag.remove_prefix(1);
    }
    while (!tag.empty() && std::isspace(static_cast<unsigned char>(tag.back()))) tag.remove_suffix(1);
    std::string out(tag);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

OotdPost make_ootd(OotdId id, UserId uploader, std::vector<ItemId> items,
                   const std::vector<std::string>& raw_hashtags, Timestamp created_at) {
    if (items.empty()) throw ContractError("OOTD '" + id + "' has no items");
    OotdPost p{std::move(id), std::move(uploader), std::move(items), {}, created_at};
    for (const auto& t : raw_hashtags) {
        auto n = normalize_tag(t);
        if (!n.empty()) p.hashtags.insert(std::move(n));
    }
    return p;
}

std::string_view to_string(InteractionKind k) {
    switch (k) {
        case InteractionKind::view: return "view";
        case InteractionKind::like: return "like";
        case InteractionKind::upload: return "upload";
        case InteractionKind::follow: return "follow";
    }
    return "view";
}

std::optional<InteractionKind> parse_interaction_kind(std::string_view s) {
    if (s == "view") return InteractionKind::view;
    if (s == "like") return InteractionKind::like;
    if (s == "upload") return InteractionKind::upload;
    if (s == "follow") return InteractionKind::follow;
    return std::nullopt;
}

void validate_user(const UserProfile& u) {
    if (u.follows.count(u.user_id)) throw ContractError("user '" + u.user_id + "' follows itself");
    const auto& r = u.recent_interactions;
    for (std::size_t i = 1; i < r.size(); ++i) {
        if (r[i].timestamp > r[i - 1].timestamp) {
            throw ContractError("user '" + u.user_id + "': recent interactions not newest-first");
        }
    }
}

void push_recent(UserProfile& u, RecentInteraction r) {
    auto pos = std::find_if(u.recent_interactions.begin(), u.recent_interactions.end(),
                            [&](const RecentInteraction& x) { return x.timestamp <= r.timestamp; });
    u.recent_interactions.insert(pos, std::move(r));
}

}  // namespace itoo
