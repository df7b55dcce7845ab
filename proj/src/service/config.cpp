#include "itoo/service/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "itoo/core/errors.hpp"

namespace itoo {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ContractError("config " + key + ": expected a number, got '" + v + "'");
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] != '-') {
            const auto u = std::stoull(v, &used);
            if (used == v.size()) return u;
        }
    } catch (const std::exception&) {
    }
    throw ContractError("config " + key + ": expected a non-negative integer, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v, std::size_t n) {
    std::vector<double> out;
    std::stringstream ss(v);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(to_double(key, trim(part)));
    if (out.size() != n) throw ContractError("config " + key + ": expected " + std::to_string(n) + " values");
    return out;
}

std::string fmt(double d) {
    std::ostringstream os;
    os << d;
    return os.str();
}

struct Setting {
    std::function<void(EngineConfig&, const std::string&)> set;
    std::function<std::string(const EngineConfig&)> get;
};

const std::vector<std::pair<std::string, Setting>>& settings() {
    using C = EngineConfig;
    using S = std::string;
    static const std::vector<std::pair<std::string, Setting>> table = {
        {"data_dir", {[](C& c, const S& v) { c.data_dir = v; }, [](const C& c) { return c.data_dir.string(); }}},
        {"host", {[](C& c, const S& v) { c.host = v; }, [](const C& c) { return c.host; }}},
        {"port",
         {[](C& c, const S& v) { c.port = static_cast<int>(to_uint("port", v)); },
          [](const C& c) { return std::to_string(c.port); }}},
        {"now",
         {[](C& c, const S& v) {
              if (v.empty()) c.now.reset();
              else c.now = parse_iso8601(v);
          },
          [](const C& c) { return c.now ? format_iso8601(*c.now) : S{}; }}},
        {"dims.classifier",
         {[](C& c, const S& v) { c.dims.classifier = to_uint("dims.classifier", v); },
          [](const C& c) { return std::to_string(c.dims.classifier); }}},
        {"dims.tagger",
         {[](C& c, const S& v) { c.dims.tagger = to_uint("dims.tagger", v); },
          [](const C& c) { return std::to_string(c.dims.tagger); }}},
        {"dims.search",
         {[](C& c, const S& v) {
              c.dims.search = to_uint("dims.search", v);
              c.catalog.dim = c.dims.search;
          },
          [](const C& c) { return std::to_string(c.dims.search); }}},
        {"index.m",
         {[](C& c, const S& v) { c.catalog.hnsw.M = to_uint("index.m", v); },
          [](const C& c) { return std::to_string(c.catalog.hnsw.M); }}},
        {"index.ef_construction",
         {[](C& c, const S& v) { c.catalog.hnsw.ef_construction = to_uint("index.ef_construction", v); },
          [](const C& c) { return std::to_string(c.catalog.hnsw.ef_construction); }}},
        {"index.ef_search",
         {[](C& c, const S& v) { c.catalog.hnsw.ef_search = to_uint("index.ef_search", v); },
          [](const C& c) { return std::to_string(c.catalog.hnsw.ef_search); }}},
        {"index.seed",
         {[](C& c, const S& v) { c.catalog.hnsw.seed = to_uint("index.seed", v); },
          [](const C& c) { return std::to_string(c.catalog.hnsw.seed); }}},
        {"index.shards",
         {[](C& c, const S& v) { c.catalog.shards = to_uint("index.shards", v); },
          [](const C& c) { return std::to_string(c.catalog.shards); }}},
        {"rec.lambda_o",
         {[](C& c, const S& v) { c.rec.lambda_o = to_double("rec.lambda_o", v); },
          [](const C& c) { return fmt(c.rec.lambda_o); }}},
        {"rec.lambda_u",
         {[](C& c, const S& v) { c.rec.lambda_u = to_double("rec.lambda_u", v); },
          [](const C& c) { return fmt(c.rec.lambda_u); }}},
        {"rec.lambda_cf",
         {[](C& c, const S& v) { c.rec.lambda_cf = to_double("rec.lambda_cf", v); },
          [](const C& c) { return fmt(c.rec.lambda_cf); }}},
        {"rec.shrinkage",
         {[](C& c, const S& v) { c.rec.shrinkage = to_double("rec.shrinkage", v); },
          [](const C& c) { return fmt(c.rec.shrinkage); }}},
        {"rec.alpha",
         {[](C& c, const S& v) { c.rec.alpha = to_double("rec.alpha", v); },
          [](const C& c) { return fmt(c.rec.alpha); }}},
        {"rec.beta",
         {[](C& c, const S& v) { c.rec.beta = to_double("rec.beta", v); },
          [](const C& c) { return fmt(c.rec.beta); }}},
        {"rec.history",
         {[](C& c, const S& v) { c.rec.history = to_uint("rec.history", v); },
          [](const C& c) { return std::to_string(c.rec.history); }}},
        {"rec.stale_epsilon",
         {[](C& c, const S& v) { c.rec.stale_epsilon = to_double("rec.stale_epsilon", v); },
          [](const C& c) { return fmt(c.rec.stale_epsilon); }}},
        {"rec.neighbors",
         {[](C& c, const S& v) { c.rec.neighbors = to_uint("rec.neighbors", v); },
          [](const C& c) { return std::to_string(c.rec.neighbors); }}},
        {"rec.view_weight",
         {[](C& c, const S& v) { c.rec.kind_weights.view = to_double("rec.view_weight", v); },
          [](const C& c) { return fmt(c.rec.kind_weights.view); }}},
        {"rec.like_weight",
         {[](C& c, const S& v) { c.rec.kind_weights.like = to_double("rec.like_weight", v); },
          [](const C& c) { return fmt(c.rec.kind_weights.like); }}},
        {"rec.feed_ratios",
         {[](C& c, const S& v) {
              const auto r = to_doubles("rec.feed_ratios", v, 3);
              c.rec.feed = {r[0], r[1], r[2]};
          },
          [](const C& c) {
              return fmt(c.rec.feed.cfcbf) + "," + fmt(c.rec.feed.weekly_best) + "," + fmt(c.rec.feed.segment_best);
          }}},
        {"rec.leader_ratios",
         {[](C& c, const S& v) {
              const auto r = to_doubles("rec.leader_ratios", v, 4);
              c.rec.leaders = {r[0], r[1], r[2], r[3]};
          },
          [](const C& c) {
              return fmt(c.rec.leaders.latent) + "," + fmt(c.rec.leaders.graph) + "," +
                     fmt(c.rec.leaders.segment) + "," + fmt(c.rec.leaders.popular);
          }}},
        {"rec.walks",
         {[](C& c, const S& v) { c.rec.walks = to_uint("rec.walks", v); },
          [](const C& c) { return std::to_string(c.rec.walks); }}},
        {"rec.seed",
         {[](C& c, const S& v) { c.rec.seed = to_uint("rec.seed", v); },
          [](const C& c) { return std::to_string(c.rec.seed); }}},
        {"pipeline.workers",
         {[](C& c, const S& v) { c.pipeline_workers = to_uint("pipeline.workers", v); },
          [](const C& c) { return std::to_string(c.pipeline_workers); }}},
        {"pipeline.iou_threshold",
         {[](C& c, const S& v) { c.iou_threshold = to_double("pipeline.iou_threshold", v); },
          [](const C& c) { return fmt(c.iou_threshold); }}},
        {"pipeline.seed",
         {[](C& c, const S& v) { c.plugin_seed = to_uint("pipeline.seed", v); },
          [](const C& c) { return std::to_string(c.plugin_seed); }}},
        {"train.batch_pairs",
         {[](C& c, const S& v) { c.train.batch_pairs = to_uint("train.batch_pairs", v); },
          [](const C& c) { return std::to_string(c.train.batch_pairs); }}},
        {"train.temperature",
         {[](C& c, const S& v) { c.train.temperature = to_double("train.temperature", v); },
          [](const C& c) { return fmt(c.train.temperature); }}},
        {"train.learning_rate",
         {[](C& c, const S& v) { c.train.learning_rate = to_double("train.learning_rate", v); },
          [](const C& c) { return fmt(c.train.learning_rate); }}},
        {"train.epochs",
         {[](C& c, const S& v) { c.train.epochs = to_uint("train.epochs", v); },
          [](const C& c) { return std::to_string(c.train.epochs); }}},
        {"train.seed",
         {[](C& c, const S& v) { c.train.seed = to_uint("train.seed", v); },
          [](const C& c) { return std::to_string(c.train.seed); }}},
        {"train.sampling_weights",
         {[](C& c, const S& v) {
              SamplingWeights w;
              std::stringstream ss(v);
              for (std::string part; std::getline(ss, part, ',');) {
                  part = trim(part);
                  if (part.empty()) continue;
                  const auto colon = part.find(':');
                  if (colon == std::string::npos) {
                      throw ContractError("config train.sampling_weights: expected source:weight, got '" + part + "'");
                  }
                  w[trim(part.substr(0, colon))] = to_double("train.sampling_weights", trim(part.substr(colon + 1)));
              }
              c.train.sampling_weights = std::move(w);
          },
          [](const C& c) {
              S out;
              for (const auto& [k, v] : c.train.sampling_weights) out += (out.empty() ? "" : ",") + k + ":" + fmt(v);
              return out;
          }}},
    };
    return table;
}

std::string env_name(const std::string& key) {
    std::string n = "ITOO_";
    for (char ch : key) n += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return n;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("config: expected key = value", lineno);
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("config: empty key", lineno);
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_setting(EngineConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& [k, s] : settings()) {
        if (k == key) {
            s.set(cfg, value);
            return;
        }
    }
    throw ContractError("unknown config key '" + key + "'");
}

EngineConfig load_config(const std::optional<std::filesystem::path>& path) {
    EngineConfig cfg;
    if (path) {
        std::ifstream f(*path);
        if (!f) throw std::runtime_error("cannot open config " + path->string());
        std::stringstream ss;
        ss << f.rdbuf();
        const auto kv = parse_key_values(ss.str());
        for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
        if (kv.count("data_dir") && cfg.data_dir.is_relative()) {
            cfg.data_dir = (path->parent_path() / cfg.data_dir).lexically_normal();
        }
    }
    for (const auto& [k, _] : settings()) {
        if (const char* v = std::getenv(env_name(k).c_str())) apply_setting(cfg, k, v);
    }
    cfg.rec.validate();
    return cfg;
}

std::vector<std::pair<std::string, std::string>> describe_config(const EngineConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, s] : settings()) out.emplace_back(k, s.get(cfg));
    return out;
}

}  // namespace itoo
