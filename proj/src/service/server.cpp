#include "itoo/service/server.hpp"

#include <httplib.h>

#include "itoo/core/errors.hpp"
#include "itoo/ingest/json_codec.hpp"

namespace itoo {

using nlohmann::json;

namespace {

/// Bad request input, naming the offending field.
class RequestError : public ContractError {
public:
    RequestError(const std::string& field, const std::string& what) : ContractError(what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Engine& engine, Fn fn) {
    return [&engine, fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const RequestError& e) {
            send(res, 400, {{"error", e.what()}, {"field", e.field()}, {"snapshot_version", engine.snapshot_version()}});
        } catch (const NotFoundError& e) {
            send(res, 404, {{"error", e.what()}, {"snapshot_version", engine.snapshot_version()}});
        } catch (const ContractError& e) {
            send(res, 400, {{"error", e.what()}, {"snapshot_version", engine.snapshot_version()}});
        } catch (const ParseError& e) {
            send(res, 400, {{"error", e.what()}, {"snapshot_version", engine.snapshot_version()}});
        } catch (const SchemaError& e) {
            send(res, 400, {{"error", e.what()}, {"snapshot_version", engine.snapshot_version()}});
        } catch (const std::exception& e) {
            send(res, 500, {{"error", e.what()}, {"snapshot_version", engine.snapshot_version()}});
        }
    };
}

json parse_body(const httplib::Request& req) {
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) throw RequestError("body", "request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw RequestError("body", std::string("malformed JSON: ") + e.what());
    }
}

std::string required_param(const httplib::Request& req, const std::string& name) {
    if (!req.has_param(name) || req.get_param_value(name).empty()) {
        throw RequestError(name, "missing query parameter '" + name + "'");
    }
    return req.get_param_value(name);
}

std::uint64_t uint_value(const std::string& field, const std::string& text, std::uint64_t lo, std::uint64_t hi) {
    try {
        std::size_t used = 0;
        if (!text.empty() && text[0] != '-') {
            const auto v = std::stoull(text, &used);
            if (used == text.size() && v >= lo && v <= hi) return v;
        }
    } catch (const std::exception&) {
    }
    throw RequestError(field, "'" + field + "' must be an integer in [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
}

std::size_t k_param(const httplib::Request& req) {
    if (!req.has_param("k")) return 10;
    return uint_value("k", req.get_param_value("k"), 1, 1000);
}

std::optional<std::size_t> ef_param(const httplib::Request& req) {
    if (!req.has_param("ef")) return std::nullopt;
    return uint_value("ef", req.get_param_value("ef"), 1, 1u << 30);
}

template <typename T>
T body_field(const json& j, const std::string& name) {
    if (!j.contains(name)) throw RequestError(name, "missing field '" + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw RequestError(name, "field '" + name + "' has the wrong type");
    }
}

std::optional<Timestamp> optional_time(const json& j, const std::string& name) {
    if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
    try {
        return parse_iso8601(body_field<std::string>(j, name));
    } catch (const RequestError&) {
        throw;
    } catch (const std::exception& e) {
        throw RequestError(name, e.what());
    }
}

json ranked_ootds(const Engine& engine, const std::vector<Ranked>& list) {
    json arr = json::array();
    for (const auto& r : list) {
        const auto d = engine.ootd_detail(r.id).value;
        json tiles = json::array();
        for (const auto& it : d.items) tiles.push_back({{"sub_category", it.sub_category}, {"color", it.color_tag}});
        arr.push_back({{"ootd_id", r.id},
                       {"score", r.score},
                       {"source", std::string(to_string(r.source))},
                       {"uploader_id", d.ootd.uploader_id},
                       {"hashtags", d.ootd.hashtags},
                       {"image_ref", "ootd/" + r.id},
                       {"tiles", tiles},
                       {"created_at", format_iso8601(d.ootd.created_at)}});
    }
    return arr;
}

json item_hits(const Engine& engine, const std::vector<SearchHit>& hits) {
    json arr = json::array();
    for (const auto& h : hits) {
        arr.push_back({{"item_id", h.id}, {"score", h.score}, {"sub_category", engine.item(h.id).value.sub_category}});
    }
    return arr;
}

RasterImage image_from_body(const json& body) {
    if (body.contains("image_path")) {
        try {
            return read_ppm(body_field<std::string>(body, "image_path"));
        } catch (const RequestError&) {
            throw;
        } catch (const std::exception& e) {
            throw RequestError("image_path", e.what());
        }
    }
    if (!body.contains("image")) throw RequestError("image", "provide 'image' or 'image_path'");
    const auto& img = body.at("image");
    if (!img.is_object()) throw RequestError("image", "'image' must be an object");
    const int w = body_field<int>(img, "width");
    const int h = body_field<int>(img, "height");
    const auto rgb = body_field<std::vector<int>>(img, "rgb");
    std::vector<std::uint8_t> px;
    px.reserve(rgb.size());
    for (int v : rgb) {
        if (v < 0 || v > 255) throw RequestError("rgb", "pixel values must be in [0, 255]");
        px.push_back(static_cast<std::uint8_t>(v));
    }
    try {
        return RasterImage(w, h, std::move(px));
    } catch (const ContractError& e) {
        throw RequestError("image", e.what());
    }
}

}  // namespace

void register_routes(httplib::Server& srv, Engine& engine) {
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Get("/health", guarded(engine, [&](const httplib::Request&, httplib::Response& res) {
                const auto s = engine.stats();
                send(res, 200,
                     {{"status", "ok"},
                      {"snapshot_version", s.snapshot_version},
                      {"clock", format_iso8601(s.clock)},
                      {"items", s.items},
                      {"ootds", s.ootds},
                      {"users", s.users},
                      {"events", s.events},
                      {"indexed_items", s.indexed_items},
                      {"pending_items", s.pending_items}});
            }));

    srv.Get("/users", guarded(engine, [&](const httplib::Request&, httplib::Response& res) {
                send(res, 200, {{"users", engine.users()}, {"snapshot_version", engine.snapshot_version()}});
            }));

    srv.Get(R"(/users/([^/]+))", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                const auto u = engine.user(req.matches[1]);
                auto j = user_to_json(u.value);
                json recent = json::array();
                for (const auto& r : u.value.recent_interactions) {
                    recent.push_back({{"ootd_id", r.ootd_id},
                                      {"kind", std::string(to_string(r.kind))},
                                      {"timestamp", format_iso8601(r.timestamp)}});
                }
                j["recent_interactions"] = recent;
                send(res, 200, {{"user", j}, {"snapshot_version", u.snapshot_version}});
            }));

    srv.Post("/items", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 ItemRecord item;
                 try {
                     auto j = body;
                     if (!j.contains("item_id")) j["item_id"] = 0;
                     item = item_from_json(j);
                 } catch (const ContractError& e) {
                     throw RequestError("item", e.what());
                 }
                 const auto r = engine.ingest_item(std::move(item));
                 send(res, 201, {{"item_id", r.value}, {"snapshot_version", r.snapshot_version}});
             }));

    srv.Get(R"(/items/(\d+))", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                const auto id = uint_value("item_id", req.matches[1], 0, UINT64_MAX);
                const auto r = engine.item(id);
                send(res, 200, {{"item", item_to_json(r.value, false)}, {"snapshot_version", r.snapshot_version}});
            }));

    srv.Post("/ootds", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 UploadRequest up;
                 up.user_id = body_field<std::string>(body, "user_id");
                 if (body.contains("ootd_id")) up.ootd_id = body_field<std::string>(body, "ootd_id");
                 if (body.contains("hashtags")) up.hashtags = body_field<std::vector<std::string>>(body, "hashtags");
                 up.created_at = optional_time(body, "created_at");
                 up.image = image_from_body(body);
                 const auto r = engine.upload_ootd(up);
                 json items = json::array();
                 for (const auto& it : r.items) items.push_back(item_to_json(it, false));
                 json errors = json::array();
                 for (const auto& e : r.errors) {
                     errors.push_back({{"crop_index", e.crop_index}, {"stage", e.stage}, {"message", e.message}});
                 }
                 send(res, 201,
                      {{"ootd", ootd_to_json(r.ootd)},
                       {"items", items},
                       {"errors", errors},
                       {"snapshot_version", r.snapshot_version}});
             }));

    srv.Get(R"(/ootds/([^/]+))", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                const auto d = engine.ootd_detail(req.matches[1]);
                json items = json::array();
                for (const auto& it : d.value.items) items.push_back(item_to_json(it, false));
                send(res, 200,
                     {{"ootd", ootd_to_json(d.value.ootd)}, {"items", items}, {"snapshot_version", d.snapshot_version}});
            }));

    srv.Post("/interactions", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 const auto user = body_field<std::string>(body, "user_id");
                 const auto kind_s = body_field<std::string>(body, "kind");
                 const auto kind = parse_interaction_kind(kind_s);
                 if (!kind || *kind == InteractionKind::upload) {
                     throw RequestError("kind", "'kind' must be one of view, like, follow");
                 }
                 const auto target = body_field<std::string>(body, "target_id");
                 const auto r = engine.record_interaction(user, *kind, target, optional_time(body, "timestamp"));
                 send(res, 201, {{"event", interaction_to_json(r.value)}, {"snapshot_version", r.snapshot_version}});
             }));

    srv.Get("/feed", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                const auto user = required_param(req, "user");
                const auto k = k_param(req);
                const auto r = engine.feed(user, k);
                send(res, 200,
                     {{"user", user}, {"k", k}, {"items", ranked_ootds(engine, r.value)},
                      {"snapshot_version", r.snapshot_version}});
            }));

    srv.Get("/leaders", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                const auto user = required_param(req, "user");
                const auto r = engine.leaders(user, k_param(req));
                json arr = json::array();
                for (const auto& l : r.value) {
                    arr.push_back({{"user_id", l.id}, {"score", l.score}, {"source", std::string(to_string(l.source))}});
                }
                send(res, 200, {{"user", user}, {"results", arr}, {"snapshot_version", r.snapshot_version}});
            }));

    srv.Get("/similar-items", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                const auto id = uint_value("item_id", required_param(req, "item_id"), 0, UINT64_MAX);
                const auto r = engine.similar_items(id, k_param(req), ef_param(req));
                const auto super = engine.hierarchy().require_super(engine.item(id).value.sub_category);
                send(res, 200,
                     {{"item_id", id}, {"super_category", super}, {"results", item_hits(engine, r.value)},
                      {"snapshot_version", r.snapshot_version}});
            }));

    srv.Post("/similar-items", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 const auto super = body_field<std::string>(body, "super_category");
                 const auto vec = body_field<std::vector<float>>(body, "vector");
                 const std::size_t k = body.contains("k") ? body_field<std::size_t>(body, "k") : 10;
                 if (k < 1 || k > 1000) throw RequestError("k", "'k' must be in [1, 1000]");
                 Versioned<std::vector<SearchHit>> r;
                 try {
                     r = engine.similar_to_vector(super, vec, k);
                 } catch (const SchemaError& e) {
                     throw RequestError("vector", e.what());
                 } catch (const ContractError& e) {
                     throw RequestError("vector", e.what());
                 }
                 send(res, 200,
                      {{"super_category", super}, {"results", item_hits(engine, r.value)},
                       {"snapshot_version", r.snapshot_version}});
             }));

    srv.Get("/similar-ootds", guarded(engine, [&](const httplib::Request& req, httplib::Response& res) {
                const auto o = required_param(req, "ootd_id");
                const auto r = engine.similar_ootds(o, k_param(req));
                send(res, 200,
                     {{"ootd_id", o}, {"results", ranked_ootds(engine, r.value)},
                      {"snapshot_version", r.snapshot_version}});
            }));

    srv.Post("/rebuild", guarded(engine, [&](const httplib::Request&, httplib::Response& res) {
                 const auto r = engine.rebuild();
                 send(res, r.ok ? 200 : 500,
                      {{"ok", r.ok}, {"error", r.error}, {"rejected_ids", r.rejected_ids},
                       {"snapshot_version", r.version}});
             }));
}

bool serve(Engine& engine, const std::string& host, int port) {
    httplib::Server srv;
    register_routes(srv, engine);
    return srv.listen(host, port);
}

}  // namespace itoo
