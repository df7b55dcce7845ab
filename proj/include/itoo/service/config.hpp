#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "itoo/core/types.hpp"
#include "itoo/metric/trainer.hpp"
#include "itoo/stylerec/config.hpp"
#include "itoo/vecindex/catalog.hpp"

namespace itoo {

struct EngineConfig {
    std::filesystem::path data_dir = "data/fixture";
    std::string host = "127.0.0.1";
    int port = 8080;
    EmbeddingDims dims;
    CatalogConfig catalog;
    RecConfig rec;
    std::optional<Timestamp> now;  // snapshot clock; defaults to the newest timestamp in the data
    std::size_t pipeline_workers = 4;
    double iou_threshold = 0.3;
    std::uint64_t plugin_seed = 11;
    TrainConfig train;
};

/// `key = value` lines, `#` comments. Throws ParseError on a line without '='.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies one setting; throws ContractError for unknown keys or bad values.
void apply_setting(EngineConfig& cfg, const std::string& key, const std::string& value);

/// Defaults, then the file (if any), then ITOO_* environment variables, where the variable
/// name is the key upper-cased with '.' replaced by '_' (rec.lambda_o -> ITOO_REC_LAMBDA_O).
EngineConfig load_config(const std::optional<std::filesystem::path>& path);

/// All recognized keys with their current values, in a stable order.
std::vector<std::pair<std::string, std::string>> describe_config(const EngineConfig& cfg);

}  // namespace itoo
