#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "itoo/core/errors.hpp"
#include "itoo/vecindex/catalog.hpp"
#include "itoo/vecindex/exact_search.hpp"
#include "itoo/vecindex/hnsw.hpp"
#include "itoo/vecindex/sharded.hpp"
#include "test_support.hpp"

using namespace itoo;

namespace {

std::vector<float> random_unit(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<float> g;
    std::vector<float> v(d);
    double n = 0;
    for (auto& x : v) {
        x = g(rng);
        n += static_cast<double>(x) * x;
    }
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(n));
    return v;
}

std::map<ItemId, std::vector<float>> random_set(std::size_t n, std::size_t d, std::uint64_t seed,
                                                ItemId first = 1) {
    std::mt19937_64 rng(seed);
    std::map<ItemId, std::vector<float>> m;
    for (std::size_t i = 0; i < n; ++i) m[first + i] = random_unit(d, rng);
    return m;
}

// Independent oracle: full sort of double-precision cosines.
std::vector<ItemId> brute_force_ids(const std::map<ItemId, std::vector<float>>& set, const std::vector<float>& q,
                                    std::size_t k) {
    std::vector<std::pair<double, ItemId>> all;
    for (const auto& [id, v] : set) {
        double dot = 0, nv = 0, nq = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            dot += static_cast<double>(v[i]) * q[i];
            nv += static_cast<double>(v[i]) * v[i];
            nq += static_cast<double>(q[i]) * q[i];
        }
        all.emplace_back(dot / std::sqrt(nv * nq), id);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<ItemId> ids;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) ids.push_back(all[i].second);
    return ids;
}

std::vector<ItemId> ids_of(const std::vector<SearchHit>& hits) {
    std::vector<ItemId> ids;
    for (const auto& h : hits) ids.push_back(h.id);
    return ids;
}

double overlap(const std::vector<ItemId>& a, const std::vector<ItemId>& b) {
    std::set<ItemId> sa(a.begin(), a.end());
    std::size_t n = 0;
    for (auto id : b) n += sa.count(id);
    return static_cast<double>(n);
}

}  // namespace

TEST_CASE("empty index returns no hits") {
    const auto idx = HnswIndex::build({}, HnswParams{});
    CHECK(idx.empty());
    const std::vector<float> q(8, 1.0f);
    CHECK(idx.search(q, 5).empty());
}

TEST_CASE("single-vector index always returns that id") {
    const auto idx = HnswIndex::build({{42, {0.0f, 3.0f}}}, HnswParams{});
    for (const auto& q : std::vector<std::vector<float>>{{1, 0}, {0, 1}, {-1, -1}}) {
        const auto hits = idx.search(q, 3);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].id == 42);
    }
}

TEST_CASE("build rejects zero vectors with their ids and mixed dimensions") {
    try {
        HnswIndex::build({{1, {1, 0}}, {2, {0, 0}}, {3, {0, 1}}, {4, {0, 0}}}, HnswParams{});
        FAIL("expected BuildError");
    } catch (const BuildError& e) {
        CHECK(e.rejected_ids() == std::vector<std::uint64_t>{2, 4});
    }
    CHECK_THROWS_AS(HnswIndex::build({{1, {1, 0}}, {2, {1, 0, 0}}}, HnswParams{}), SchemaError);
    CHECK_THROWS_AS(HnswIndex::build({{1, {1, 0}}}, HnswParams{}, 3), SchemaError);
}

TEST_CASE("search rejects a query of the wrong dimension") {
    const auto idx = HnswIndex::build(random_set(10, 4, 1), HnswParams{});
    const std::vector<float> q(5, 1.0f);
    CHECK_THROWS_AS(idx.search(q, 3), SchemaError);
}

TEST_CASE("an indexed vector retrieves itself first with score 1") {
    const auto set = random_set(500, 32, 2);
    const auto idx = HnswIndex::build(set, HnswParams{});
    for (ItemId id : {1, 77, 250, 500}) {
        const auto hits = idx.search(set.at(id), 5);
        REQUIRE_FALSE(hits.empty());
        CHECK(hits[0].id == id);
        CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("k larger than the index returns everything in rank order") {
    const auto set = random_set(30, 8, 3);
    const auto idx = HnswIndex::build(set, HnswParams{});
    const auto hits = idx.search(set.at(5), 100);
    CHECK(hits.size() == 30);
    CHECK(std::is_sorted(hits.begin(), hits.end(), ranks_before));
}

TEST_CASE("1000-item index agrees with brute force on at least 9.5 of 10") {
    const auto set = random_set(1000, 32, 4);
    const auto idx = HnswIndex::build(set, HnswParams{});
    std::mt19937_64 rng(99);
    double total = 0;
    const int queries = 200;
    for (int i = 0; i < queries; ++i) {
        const auto q = random_unit(32, rng);
        total += overlap(brute_force_ids(set, q, 10), ids_of(idx.search(q, 10)));
    }
    CHECK(total / queries >= 9.5);
}

TEST_CASE("exhaustive ef equals the brute-force oracle exactly") {
    const auto set = random_set(400, 16, 5);
    const auto idx = HnswIndex::build(set, HnswParams{});
    std::mt19937_64 rng(6);
    for (int i = 0; i < 50; ++i) {
        const auto q = random_unit(16, rng);
        CHECK(ids_of(idx.search(q, 10, kExhaustive)) == brute_force_ids(set, q, 10));
        CHECK(ids_of(idx.search(q, 10, idx.size())) == brute_force_ids(set, q, 10));
    }
}

TEST_CASE("recall is non-decreasing in ef") {
    const auto set = random_set(3000, 32, 7);
    HnswParams p;
    p.M = 8;
    p.ef_construction = 60;
    const auto idx = HnswIndex::build(set, p);
    std::mt19937_64 rng(8);
    std::vector<std::vector<float>> qs;
    for (int i = 0; i < 500; ++i) qs.push_back(random_unit(32, rng));
    std::vector<double> recall;
    for (std::size_t ef : {10, 40, 160}) {
        double hit = 0;
        for (const auto& q : qs) hit += overlap(brute_force_ids(set, q, 10), ids_of(idx.search(q, 10, ef)));
        recall.push_back(hit / (10.0 * qs.size()));
    }
    CHECK(recall[0] <= recall[1]);
    CHECK(recall[1] <= recall[2]);
}

TEST_CASE("graph invariants and memory accounting hold") {
    for (std::size_t n : {1, 2, 17, 600}) {
        const auto set = random_set(n, 12, 10 + n);
        HnswParams p;
        p.M = 6;
        const auto idx = HnswIndex::build(set, p);
        CHECK(idx.validate().empty());
        CHECK(idx.vector_bytes() == n * 12 * sizeof(float));
        double level_sum = 0;
        for (const auto& [id, _] : set) level_sum += idx.level_of(id);
        const double avg_layers = level_sum / static_cast<double>(n);
        CHECK(static_cast<double>(idx.edge_count()) <= n * (2.0 * p.M + p.M * avg_layers) + 1e-9);
        for (const auto& [id, _] : set) {
            for (int l = 0; l <= idx.level_of(id); ++l) {
                CHECK(idx.neighbors(id, l).size() <= (l == 0 ? 2 * p.M : p.M));
            }
        }
    }
}

TEST_CASE("same seed builds the same graph") {
    const auto set = random_set(300, 8, 11);
    const auto a = HnswIndex::build(set, HnswParams{});
    const auto b = HnswIndex::build(set, HnswParams{});
    for (const auto& [id, _] : set) {
        REQUIRE(a.level_of(id) == b.level_of(id));
        CHECK(a.neighbors(id, 0) == b.neighbors(id, 0));
    }
}

TEST_CASE("saved index reloads with identical results") {
    itoo::testing::TempDir dir;
    const auto set = random_set(700, 24, 12);
    const auto idx = HnswIndex::build(set, HnswParams{});
    idx.save(dir / "i.hnsw");
    const auto back = HnswIndex::load(dir / "i.hnsw");
    CHECK(back.validate().empty());
    std::mt19937_64 rng(13);
    for (int i = 0; i < 30; ++i) {
        const auto q = random_unit(24, rng);
        CHECK(back.search(q, 10) == idx.search(q, 10));
    }
}

TEST_CASE("corrupt index snapshots are rejected") {
    itoo::testing::TempDir dir;
    std::ofstream(dir / "bad.hnsw", std::ios::binary) << "ITOOHNSW" << std::string(40, '\x07');
    CHECK_THROWS(HnswIndex::load(dir / "bad.hnsw"));
}

TEST_CASE("serial and parallel batch kernels agree exactly") {
    const auto set = random_set(800, 16, 14);
    FlatVectors store(16);
    for (const auto& [id, v] : set) store.add(id, v);
    std::mt19937_64 rng(15);
    std::vector<std::vector<float>> qs;
    for (int i = 0; i < 64; ++i) qs.push_back(random_unit(16, rng));
    CHECK(exact_topk_batch(store, qs, 10, Exec::serial) == exact_topk_batch(store, qs, 10, Exec::parallel));
    const auto idx = HnswIndex::build(set, HnswParams{});
    CHECK(idx.search_batch(qs, 10, std::nullopt, Exec::serial) == idx.search_batch(qs, 10, std::nullopt, Exec::parallel));
    for (std::size_t i = 0; i < qs.size(); ++i) {
        CHECK(ids_of(exact_topk_batch(store, {qs[i]}, 10, Exec::serial)[0]) == brute_force_ids(set, qs[i], 10));
    }
}

TEST_CASE("merge_topk keeps the global order") {
    const std::vector<std::vector<SearchHit>> parts = {{{1, 0.9f}, {4, 0.5f}, {6, 0.1f}},
                                                       {{2, 0.8f}, {3, 0.5f}},
                                                       {{5, 0.95f}}};
    const auto merged = merge_topk(parts, 5);
    CHECK(ids_of(merged) == std::vector<ItemId>{5, 1, 2, 3, 4});
}

TEST_CASE("one shard behaves like a plain index") {
    const auto set = random_set(300, 16, 16);
    const auto single = HnswIndex::build(set, HnswParams{});
    const auto sharded = ShardedIndex::build(set, 1, HnswParams{});
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        const auto q = random_unit(16, rng);
        CHECK(sharded.search(q, 10) == single.search(q, 10));
    }
}

TEST_CASE("sharded exhaustive search equals brute force over the union") {
    const auto set = random_set(1000, 16, 18);
    std::mt19937_64 rng(19);
    for (std::size_t shards : {2, 3, 4}) {
        const auto idx = ShardedIndex::build(set, shards, HnswParams{});
        CHECK(idx.size() == set.size());
        for (const auto& [id, _] : set) CHECK(idx.shards()[idx.shard_of(id)].contains(id));
        for (int i = 0; i < 20; ++i) {
            const auto q = random_unit(16, rng);
            const auto s = idx.search(q, 10, kExhaustive);
            CHECK(ids_of(s) == brute_force_ids(set, q, 10));
            CHECK(idx.search(q, 10, kExhaustive, Exec::parallel) == s);
        }
    }
}

TEST_CASE("catalog rebuild adds items to one super-category only") {
    CatalogConfig cfg;
    cfg.dim = 8;
    GroupedVectors g;
    g["shoes"] = random_set(50, 8, 20, 1);
    g["top"] = random_set(50, 8, 21, 1000);
    const auto first = rebuild_catalog(IndexCatalog{}, g, cfg, Timestamp{});
    CHECK(first.version() == 1);

    auto more = g;
    const auto extra = random_set(100, 8, 22, 5000);
    more["shoes"].insert(extra.begin(), extra.end());
    const auto second = rebuild_catalog(first, {{"shoes", more["shoes"]}}, cfg, Timestamp{});
    CHECK(second.version() == 2);
    for (const auto& [id, v] : extra) {
        CHECK(second.search("shoes", v, 1)[0].id == id);
        CHECK(ids_of(second.search("top", v, 1))[0] < 5000);
    }
    CHECK(second.find("top")->index == first.find("top")->index);
}

TEST_CASE("identical rebuilds answer identically") {
    CatalogConfig cfg;
    cfg.dim = 8;
    GroupedVectors g{{"bag", random_set(200, 8, 23)}};
    const auto a = rebuild_catalog(IndexCatalog{}, g, cfg, Timestamp{});
    const auto b = rebuild_catalog(IndexCatalog{}, g, cfg, Timestamp{});
    std::mt19937_64 rng(24);
    for (int i = 0; i < 20; ++i) {
        const auto q = random_unit(8, rng);
        CHECK(a.search("bag", q, 10) == b.search("bag", q, 10));
    }
}

TEST_CASE("a failing rebuild leaves the live catalog in place") {
    CatalogConfig cfg;
    cfg.dim = 4;
    CatalogHandle handle;
    GroupedVectors g{{"bag", random_set(20, 4, 25)}};
    const auto ok = handle.rebuild(g, cfg, Timestamp{});
    REQUIRE(ok.ok);
    const auto live = handle.current();

    auto bad = g;
    bad["bag"][999] = {0, 0, 0, 0};
    const auto failed = handle.rebuild(bad, cfg, Timestamp{});
    CHECK_FALSE(failed.ok);
    CHECK(failed.rejected_ids == std::vector<ItemId>{999});
    CHECK_FALSE(failed.error.empty());
    CHECK(failed.version == ok.version);
    CHECK(handle.current() == live);
}
