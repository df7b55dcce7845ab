#pragma once

#include <string>

#include "itoo/service/engine.hpp"

namespace httplib {
class Server;
}

namespace itoo {

/// JSON API over HTTP. Every response body carries "snapshot_version"; malformed requests get
/// 400 with {"error", "field"}, unknown ids 404, internal failures 500.
///
///   GET  /health                      GET  /users            GET /users/{id}
///   POST /items                       GET  /items/{id}
///   POST /ootds                       GET  /ootds/{id}
///   POST /interactions
///   GET  /feed?user=&k=               GET  /leaders?user=&k=
///   GET  /similar-items?item_id=&k=   POST /similar-items {"super_category","vector","k"}
///   GET  /similar-ootds?ootd_id=&k=
///   POST /rebuild
void register_routes(httplib::Server& server, Engine& engine);

/// Blocks until the server stops. Returns false if the socket could not be bound.
bool serve(Engine& engine, const std::string& host, int port);

}  // namespace itoo
