#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include <httplib.h>
#include <sys/wait.h>
#include <unistd.h>

#include "itoo/core/errors.hpp"
#include "itoo/service/config.hpp"
#include "itoo/service/engine.hpp"
#include "itoo/service/fixtures.hpp"
#include "itoo/service/server.hpp"
#include "test_support.hpp"

using namespace itoo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

FixtureSpec small_spec() {
    FixtureSpec s;
    s.users = 20;
    s.items_per_sub = 4;
    s.ootds = 50;
    s.views_per_user = 15;
    s.uploads = 6;
    return s;
}

EngineConfig config_for(const fs::path& dir) {
    EngineConfig cfg;
    cfg.data_dir = dir;
    cfg.catalog.shards = 2;
    return cfg;
}

struct Upload {
    RasterImage image;
    UserId user;
    std::vector<std::string> hashtags;
};

std::vector<Upload> read_uploads(const fs::path& dir) {
    std::vector<Upload> out;
    std::ifstream in(dir / "uploads" / "manifest.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        const auto j = json::parse(line);
        out.push_back({read_ppm(dir / "uploads" / j.at("file").get<std::string>()), j.at("user_id"),
                       j.at("hashtags").get<std::vector<std::string>>()});
    }
    return out;
}

json ranked_json(const std::vector<Ranked>& list) {
    json a = json::array();
    for (const auto& r : list) a.push_back({r.id, r.score, to_string(r.source)});
    return a;
}

/// Query and recommendation outputs used to compare engine states.
json observe(const Engine& e) {
    json out;
    out["version"] = e.snapshot_version();
    const auto users = e.users();
    for (std::size_t i = 0; i < users.size(); i += 3) {
        out["feed"][users[i]] = ranked_json(e.feed(users[i], 10).value);
        out["leaders"][users[i]] = ranked_json(e.leaders(users[i], 5).value);
    }
    const auto st = e.stats();
    out["items"] = st.items;
    out["events"] = st.events;
    for (ItemId id = 1; id <= st.items; id += 17) {
        json hits = json::array();
        for (const auto& h : e.similar_items(id, 5).value) hits.push_back({h.id, h.score});
        out["similar"][std::to_string(id)] = hits;
    }
    return out;
}

/// Server on an ephemeral port for the lifetime of the object.
class LiveServer {
public:
    explicit LiveServer(Engine& engine) {
        register_routes(server_, engine);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LiveServer() {
        server_.stop();
        thread_.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        return c;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

}  // namespace

TEST_CASE("config layers defaults, file and environment") {
    testing::TempDir dir;
    {
        std::ofstream f(dir / "c.conf");
        f << "# comment\ndata_dir = data\nrec.alpha = 0.7\nindex.shards = 3\nrec.feed_ratios = 0.5, 0.25, 0.25\n";
    }
    ::setenv("ITOO_REC_ALPHA", "0.25", 1);
    const auto cfg = load_config(dir / "c.conf");
    ::unsetenv("ITOO_REC_ALPHA");
    CHECK(cfg.rec.alpha == 0.25);
    CHECK(cfg.catalog.shards == 3);
    CHECK(cfg.rec.feed.cfcbf == 0.5);
    CHECK(cfg.data_dir == dir / "data");
    CHECK(load_config(std::nullopt).rec.alpha == EngineConfig{}.rec.alpha);

    EngineConfig c;
    CHECK_THROWS_AS(apply_setting(c, "rec.gamma", "1"), ContractError);
    CHECK_THROWS_AS(apply_setting(c, "index.shards", "two"), ContractError);
    CHECK_THROWS_AS(parse_key_values("novalue\n"), ParseError);
    for (const auto& [k, v] : describe_config(c)) CHECK_NOTHROW(apply_setting(c, k, v));
}

TEST_CASE("fixtures refuse a non-empty directory") {
    testing::TempDir dir;
    std::ofstream(dir / "keep") << "x";
    CHECK_THROWS_AS(write_fixture(dir.path(), small_spec()), ContractError);
}

TEST_CASE("journal cuts off a torn final line") {
    testing::TempDir dir;
    {
        Journal j(dir / "j.jsonl");
        j.append({{"op", "a"}});
        j.append({{"op", "b"}});
    }
    std::ofstream(dir / "j.jsonl", std::ios::app) << "{\"op\": \"c";
    Journal j(dir / "j.jsonl");
    const auto recs = j.read_all();
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].at("op") == "b");
    j.append({{"op", "d"}});
    CHECK(j.read_all().size() == 3);
}

TEST_CASE("every mutation is journaled before it returns") {
    testing::TempDir dir;
    write_fixture(dir.path(), small_spec());
    Engine e(config_for(dir.path()));
    const auto users = e.users();
    const auto o = e.feed(users[0], 1).value.at(0).id;
    e.record_interaction(users[0], InteractionKind::like, o);
    Journal j(dir / "journal.jsonl");
    auto recs = j.read_all();
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].at("op") == "interaction");
    CHECK(recs[0].at("event").at("target_id") == o);

    auto item = e.item(1).value;
    item.item_id = 0;
    const auto id = e.ingest_item(item).value;
    CHECK(id > e.stats().items - 1);
    CHECK(j.read_all().size() == 2);
    CHECK(e.stats().pending_items == 1);
}

TEST_CASE("unknown references are rejected without journaling") {
    testing::TempDir dir;
    write_fixture(dir.path(), small_spec());
    Engine e(config_for(dir.path()));
    const auto u = e.users()[0];
    CHECK_THROWS_AS(e.record_interaction("ghost", InteractionKind::view, "o1"), NotFoundError);
    CHECK_THROWS_AS(e.record_interaction(u, InteractionKind::view, "nope"), NotFoundError);
    CHECK_THROWS_AS(e.record_interaction(u, InteractionKind::follow, u), ContractError);
    CHECK_THROWS_AS(e.record_interaction(u, InteractionKind::upload, "x"), ContractError);
    CHECK_THROWS_AS(e.feed("ghost", 5), NotFoundError);
    CHECK_THROWS_AS(e.similar_items(999999, 5), NotFoundError);
    CHECK(Journal(dir / "journal.jsonl").read_all().empty());
}

TEST_CASE("uploads become searchable after a rebuild") {
    testing::TempDir dir;
    write_fixture(dir.path(), small_spec());
    Engine e(config_for(dir.path()));
    const auto up = read_uploads(dir.path()).at(0);
    const auto res = e.upload_ootd({up.user, std::nullopt, up.hashtags, up.image, std::nullopt});
    CHECK(res.errors.empty());
    REQUIRE_FALSE(res.items.empty());
    CHECK(res.snapshot_version == 1);
    CHECK(e.stats().pending_items == res.items.size());

    const auto rb = e.rebuild();
    CHECK(rb.ok);
    CHECK(e.snapshot_version() == 2);
    CHECK(e.stats().pending_items == 0);
    for (const auto& it : res.items) {
        const auto hits = e.similar_items(it.item_id, 3).value;
        REQUIRE_FALSE(hits.empty());
        CHECK(hits[0].id == it.item_id);
    }
    std::set<std::string> similar;
    for (const auto& other : e.similar_ootds(res.ootd.ootd_id, 200).value) similar.insert(other.id);
    CHECK_FALSE(similar.count(res.ootd.ootd_id));
    CHECK(similar.size() == e.stats().ootds - 1);
}

TEST_CASE("restart after an abrupt exit reproduces identical outputs") {
    testing::TempDir dir;
    write_fixture(dir.path(), small_spec());
    const auto uploads = read_uploads(dir.path());
    const auto expect_path = dir / "expected.json";

    const pid_t pid = ::fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        int code = 0;
        try {
            Engine e(config_for(dir.path()));
            const auto users = e.users();
            for (std::size_t i = 0; i < 3; ++i) {
                const auto& up = uploads[i];
                e.upload_ootd({up.user, std::nullopt, up.hashtags, up.image, std::nullopt});
            }
            e.rebuild();
            for (std::size_t i = 0; i < 5; ++i) {
                const auto o = e.feed(users[i], 1).value.at(0).id;
                e.record_interaction(users[i], InteractionKind::like, o);
            }
            e.record_interaction(users[0], InteractionKind::follow, users[7]);
            std::ofstream(expect_path) << observe(e).dump();
        } catch (...) {
            code = 3;
        }
        ::_exit(code);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    REQUIRE(WIFEXITED(status));
    REQUIRE(WEXITSTATUS(status) == 0);

    const auto expected = json::parse(std::ifstream(expect_path));
    Engine e(config_for(dir.path()));
    CHECK(observe(e) == expected);
    CHECK(e.snapshot_version() == 2);
}

TEST_CASE("HTTP endpoints report status codes, field diagnostics and versions") {
    testing::TempDir dir;
    write_fixture(dir.path(), small_spec());
    Engine engine(config_for(dir.path()));
    LiveServer srv(engine);
    auto c = srv.client();
    const auto user = engine.users()[0];

    auto r = c.Get("/health");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r).at("snapshot_version") == 1);

    r = c.Get("/feed?user=" + user + "&k=0");
    CHECK(r->status == 400);
    CHECK(body_of(r).at("field") == "k");
    r = c.Get("/feed");
    CHECK(r->status == 400);
    CHECK(body_of(r).at("field") == "user");
    r = c.Get("/feed?user=nobody");
    CHECK(r->status == 404);
    CHECK(body_of(r).at("error").get<std::string>().find("unknown user") != std::string::npos);
    r = c.Post("/interactions", "{not json", "application/json");
    CHECK(r->status == 400);
    CHECK(body_of(r).at("field") == "body");
    r = c.Post("/interactions", json{{"user_id", user}, {"kind", "poke"}, {"target_id", "o1"}}.dump(),
               "application/json");
    CHECK(r->status == 400);
    CHECK(body_of(r).at("field") == "kind");
    r = c.Post("/similar-items", json{{"super_category", "top"}, {"vector", {1, 2}}}.dump(), "application/json");
    CHECK(r->status == 400);
    r = c.Get("/items/999999");
    CHECK(r->status == 404);

    for (const std::string& path : std::vector<std::string>{"/health", "/users", "/users/" + user, "/items/1", "/feed?user=" + user,
                                   "/leaders?user=" + user, "/similar-items?item_id=1", "/similar-ootds?ootd_id=o0001",
                                   "/ootds/o0001", "/feed?user=zz", "/nope?x=1"}) {
        r = c.Get(path);
        REQUIRE(r);
        if (r->status == 404 && r->body.empty()) continue;
        CHECK_MESSAGE(json::parse(r->body).contains("snapshot_version"), path);
    }
    CHECK(Journal(dir / "journal.jsonl").read_all().empty());
}

TEST_CASE("HTTP upload then similar-style query finds the uploaded OOTD") {
    testing::TempDir dir;
    write_fixture(dir.path(), small_spec());
    Engine engine(config_for(dir.path()));
    LiveServer srv(engine);
    auto c = srv.client();
    const auto up = read_uploads(dir.path()).at(1);

    auto r = c.Post("/ootds",
                    json{{"user_id", up.user}, {"hashtags", up.hashtags},
                         {"image_path", (dir / "uploads" / "upload_001.ppm").string()}}
                        .dump(),
                    "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    const auto created = body_of(r);
    const auto oid = created.at("ootd").at("ootd_id").get<std::string>();
    CHECK(created.at("snapshot_version") == 1);

    r = c.Post("/rebuild", "", "application/json");
    CHECK(r->status == 200);
    CHECK(body_of(r).at("snapshot_version") == 2);

    CHECK(engine.ootd_detail(oid).value.ootd.uploader_id == up.user);
    bool found = false;
    r = c.Get("/similar-ootds?ootd_id=o0001&k=1000");
    const auto similar = body_of(r);
    for (const auto& hit : similar.at("results")) found = found || hit.at("ootd_id") == oid;
    CHECK(found);

    r = c.Get("/similar-items?item_id=" + std::to_string(created.at("items").at(0).at("item_id").get<ItemId>()) + "&k=1");
    CHECK(body_of(r).at("results").at(0).at("item_id") == created.at("items").at(0).at("item_id"));
}

TEST_CASE("a like keeps co-liked OOTDs at the same or a better feed rank") {
    testing::TempDir dir;
    write_fixture(dir.path(), small_spec());
    Engine engine(config_for(dir.path()));
    LiveServer srv(engine);
    auto c = srv.client();

    auto feed_positions = [&](const UserId& u) {
        std::map<std::string, std::size_t> pos;
        const auto items = body_of(c.Get("/feed?user=" + u + "&k=1000")).at("items");
        for (std::size_t i = 0; i < items.size(); ++i) pos[items[i].at("ootd_id")] = i;
        return pos;
    };

    std::size_t checked = 0;
    const auto users = engine.users();
    for (std::size_t i = 0; i < users.size(); i += 4) {
        const auto& u = users[i];
        const auto before = feed_positions(u);
        if (before.empty()) continue;
        const auto target = body_of(c.Get("/feed?user=" + u + "&k=1")).at("items").at(0).at("ootd_id").get<std::string>();

        std::set<UserId> likers;
        std::map<UserId, std::set<OotdId>> liked;
        for (const auto& other : users) {
            for (const auto& ri : engine.user(other).value.recent_interactions) {
                if (ri.kind == InteractionKind::like) liked[other].insert(ri.ootd_id);
            }
            if (liked[other].count(target)) likers.insert(other);
        }
        std::set<OotdId> related;
        for (const auto& l : likers) related.insert(liked[l].begin(), liked[l].end());
        related.erase(target);

        auto r = c.Post("/interactions", json{{"user_id", u}, {"kind", "like"}, {"target_id", target}}.dump(),
                        "application/json");
        REQUIRE(r->status == 201);
        CHECK(body_of(r).at("snapshot_version") == 1);
        const auto after = feed_positions(u);
        CHECK_FALSE(after.count(target));
        for (const auto& o : related) {
            if (!before.count(o) || !after.count(o)) continue;
            CHECK_MESSAGE(after.at(o) <= before.at(o), u << " " << o);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("concurrent reads during a rebuild each see exactly one version") {
    testing::TempDir dir;
    write_fixture(dir.path(), small_spec());
    Engine engine(config_for(dir.path()));
    LiveServer srv(engine);
    const auto users = engine.users();

    std::atomic<bool> done{false};
    std::atomic<int> bad{0}, total{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 4; ++t) {
        readers.emplace_back([&, t] {
            auto c = srv.client();
            std::size_t i = t;
            while (!done) {
                auto r = c.Get("/feed?user=" + users[i++ % users.size()] + "&k=5");
                if (!r || r->status != 200) {
                    ++bad;
                    continue;
                }
                const auto v = json::parse(r->body).at("snapshot_version").get<int>();
                if (v < 1 || v > 4) ++bad;
                ++total;
            }
        });
    }
    auto c = srv.client();
    for (int i = 0; i < 3; ++i) {
        auto r = c.Post("/rebuild", "", "application/json");
        REQUIRE(r);
        CHECK(r->status == 200);
    }
    done = true;
    for (auto& th : readers) th.join();
    CHECK(bad == 0);
    CHECK(total > 0);
    CHECK(engine.snapshot_version() == 4);
}
