#include "itoo/ingest/json_codec.hpp"

#include "itoo/core/errors.hpp"

namespace itoo {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) throw ContractError(std::string("missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw ContractError(std::string("field '") + name + "' has the wrong type");
    }
}

template <typename T>
T field_or(const json& j, const char* name, T fallback) {
    if (!j.contains(name) || j.at(name).is_null()) return fallback;
    return field<T>(j, name);
}

}  // namespace

json item_to_json(const ItemRecord& item, bool with_embeddings) {
    json attrs = json::array();
    for (const auto& [g, v] : item.attribute_tags) attrs.push_back({g, v});
    json j = {{"type", "item"},
              {"item_id", item.item_id},
              {"sub_category", item.sub_category},
              {"color", item.color_tag},
              {"attributes", attrs}};
    if (with_embeddings) {
        j["classifier_embedding"] = item.classifier_embedding;
        j["tagger_embedding"] = item.tagger_embedding;
        j["search_embedding"] = item.search_embedding;
    }
    return j;
}

ItemRecord item_from_json(const json& j) {
    ItemRecord item;
    item.item_id = field<ItemId>(j, "item_id");
    item.sub_category = field<std::string>(j, "sub_category");
    item.color_tag = field_or<std::string>(j, "color", "");
    for (const auto& a : field_or<std::vector<std::vector<std::string>>>(j, "attributes", {})) {
        if (a.size() != 2) throw ContractError("field 'attributes' entries must be [group, value]");
        item.attribute_tags.emplace(a[0], a[1]);
    }
    item.classifier_embedding = field_or<std::vector<float>>(j, "classifier_embedding", {});
    item.tagger_embedding = field_or<std::vector<float>>(j, "tagger_embedding", {});
    item.search_embedding = field_or<std::vector<float>>(j, "search_embedding", {});
    return item;
}

json ootd_to_json(const OotdPost& o) {
    return {{"type", "ootd"},
            {"ootd_id", o.ootd_id},
            {"uploader_id", o.uploader_id},
            {"item_ids", o.item_ids},
            {"hashtags", o.hashtags},
            {"created_at", format_iso8601(o.created_at)}};
}

OotdPost ootd_from_json(const json& j) {
    return make_ootd(field<std::string>(j, "ootd_id"), field<std::string>(j, "uploader_id"),
                     field<std::vector<ItemId>>(j, "item_ids"),
                     field_or<std::vector<std::string>>(j, "hashtags", {}),
                     parse_iso8601(field<std::string>(j, "created_at")));
}

json user_to_json(const UserProfile& u) {
    return {{"type", "user"},
            {"user_id", u.user_id},
            {"gender", u.demographics.gender},
            {"birth_year", u.demographics.birth_year},
            {"preference_tags", u.preference_tags},
            {"follows", u.follows}};
}

UserProfile user_from_json(const json& j) {
    UserProfile u;
    u.user_id = field<std::string>(j, "user_id");
    u.demographics.gender = field_or<std::string>(j, "gender", "");
    u.demographics.birth_year = field_or<int>(j, "birth_year", 0);
    for (const auto& t : field_or<std::vector<std::string>>(j, "preference_tags", {})) {
        auto n = normalize_tag(t);
        if (!n.empty()) u.preference_tags.insert(n);
    }
    for (const auto& f : field_or<std::vector<std::string>>(j, "follows", {})) u.follows.insert(f);
    validate_user(u);
    return u;
}

json interaction_to_json(const InteractionEvent& e) {
    return {{"timestamp", format_iso8601(e.timestamp)},
            {"user_id", e.user_id},
            {"kind", std::string(to_string(e.kind))},
            {"target_id", e.target_id}};
}

InteractionEvent interaction_from_json(const json& j) {
    InteractionEvent e;
    e.timestamp = parse_iso8601(field<std::string>(j, "timestamp"));
    e.user_id = field<std::string>(j, "user_id");
    const auto kind = field<std::string>(j, "kind");
    auto k = parse_interaction_kind(kind);
    if (!k) throw ContractError("field 'kind' must be one of view, like, upload, follow");
    e.kind = *k;
    e.target_id = field<std::string>(j, "target_id");
    return e;
}

}  // namespace itoo
