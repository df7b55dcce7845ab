#pragma once

#include <json.hpp>

#include "itoo/core/types.hpp"

namespace itoo {

// JSON shapes shared by the metadata files, the upload journal and the HTTP API.
// Field names are stable.

nlohmann::json item_to_json(const ItemRecord& item, bool with_embeddings);
/// Throws ContractError naming the offending field.
ItemRecord item_from_json(const nlohmann::json& j);

nlohmann::json ootd_to_json(const OotdPost& ootd);
OotdPost ootd_from_json(const nlohmann::json& j);

nlohmann::json user_to_json(const UserProfile& user);
UserProfile user_from_json(const nlohmann::json& j);

nlohmann::json interaction_to_json(const InteractionEvent& e);
InteractionEvent interaction_from_json(const nlohmann::json& j);

}  // namespace itoo
