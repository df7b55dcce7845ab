#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "itoo/core/errors.hpp"
#include "itoo/core/hierarchy.hpp"
#include "itoo/core/timeutil.hpp"
#include "itoo/core/types.hpp"
#include "itoo/core/vecmath.hpp"
#include "test_support.hpp"

using namespace itoo;

TEST_CASE("cosine of (1,0) and (1,1) is 1/sqrt(2)") {
    const std::vector<double> a{1.0, 0.0};
    const std::vector<double> b{1.0, 1.0};
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.70710678).epsilon(1e-8));
}

TEST_CASE("cosine with a zero vector is zero") {
    const std::vector<double> a{0.0, 0.0};
    const std::vector<double> b{1.0, 2.0};
    CHECK(cosine_similarity(a, b) == 0.0);
}

TEST_CASE("cosine rejects mismatched dimensions") {
    const std::vector<double> a{1.0};
    const std::vector<double> b{1.0, 2.0};
    CHECK_THROWS_AS(cosine_similarity(a, b), ContractError);
}

TEST_CASE("cosine is scale invariant and bounded") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(7), b(7);
        for (auto& x : a) x = g(rng);
        for (auto& x : b) x = g(rng);
        const double c = cosine_similarity(a, b);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        auto scaled = a;
        for (auto& x : scaled) x *= 3.5;
        CHECK(cosine_similarity(scaled, b) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("jaccard of {a,b} and {b,c} is 1/3") {
    const std::set<std::string> a{"a", "b"};
    const std::set<std::string> b{"b", "c"};
    CHECK(jaccard_similarity(a, b) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("jaccard of two empty sets is 0 and of equal sets is 1") {
    const std::set<std::string> e;
    const std::set<std::string> s{"x", "y"};
    CHECK(jaccard_similarity(e, e) == 0.0);
    CHECK(jaccard_similarity(s, s) == 1.0);
    CHECK(jaccard_similarity(s, e) == 0.0);
}

TEST_CASE("jaccard matches a brute-force set oracle") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 300; ++t) {
        std::set<int> a, b;
        for (int i = 0; i < 10; ++i) {
            if (rng() % 2) a.insert(i);
            if (rng() % 3 == 0) b.insert(i);
        }
        std::size_t inter = 0;
        for (int x : a) inter += b.count(x);
        std::set<int> uni = a;
        uni.insert(b.begin(), b.end());
        const double expect = uni.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni.size());
        CHECK(jaccard_similarity(a, b) == doctest::Approx(expect));
        CHECK(jaccard_similarity(a, b) == jaccard_similarity(b, a));
    }
}

TEST_CASE("default hierarchy has 6 super-categories and 32 sub-categories") {
    const auto& h = CategoryHierarchy::default_hierarchy();
    CHECK(h.super_categories().size() == 6);
    CHECK(h.entries().size() == 32);
    CHECK(validate_hierarchy(h).empty());
    CHECK(h.super_of("jeans") == std::optional<std::string>("bottom"));
    CHECK_FALSE(h.super_of("spacesuit").has_value());
    CHECK_THROWS_AS(h.require_super("spacesuit"), ContractError);
    std::size_t total = 0;
    for (const auto& [super, n] : expected_sub_counts()) {
        CHECK(h.subs_of(super).size() == n);
        total += n;
    }
    CHECK(total == 32);
}

TEST_CASE("hierarchy validation reports duplicate mappings and wrong shape") {
    auto entries = CategoryHierarchy::default_hierarchy().entries();
    entries.push_back({"jeans", "top"});
    const CategoryHierarchy bad(CategoryHierarchy::default_hierarchy().super_categories(), entries);
    CHECK_FALSE(validate_hierarchy(bad).empty());

    const CategoryHierarchy tiny({"top"}, {{"shirt", "top"}});
    CHECK_FALSE(validate_hierarchy(tiny).empty());
}

TEST_CASE("hierarchy survives a save/load round trip") {
    testing::TempDir dir;
    const auto& h = CategoryHierarchy::default_hierarchy();
    h.save(dir / "h.tsv");
    const auto back = CategoryHierarchy::load(dir / "h.tsv");
    CHECK(back.super_categories() == h.super_categories());
    REQUIRE(back.entries().size() == h.entries().size());
    for (std::size_t i = 0; i < h.entries().size(); ++i) {
        CHECK(back.entries()[i].sub == h.entries()[i].sub);
        CHECK(back.entries()[i].super == h.entries()[i].super);
    }
}

TEST_CASE("ISO-8601 timestamps round trip") {
    const auto t = parse_iso8601("2024-02-29T23:59:58Z");
    CHECK(format_iso8601(t) == "2024-02-29T23:59:58Z");
    CHECK(parse_iso8601("2024-02-29 23:59:58") == t);
    CHECK_THROWS_AS(parse_iso8601("2023-02-29T00:00:00Z"), ContractError);
    CHECK_THROWS_AS(parse_iso8601("yesterday"), ContractError);
    CHECK_THROWS_AS(parse_iso8601("2024-01-01T24:00:00Z"), ContractError);
}

TEST_CASE("whole days between timestamps floor partial days") {
    const auto a = parse_iso8601("2024-06-01T12:00:00Z");
    CHECK(whole_days_between(a, parse_iso8601("2024-06-01T23:59:59Z")) == 0);
    CHECK(whole_days_between(a, parse_iso8601("2024-06-02T12:00:00Z")) == 1);
    CHECK(whole_days_between(a, parse_iso8601("2024-06-08T11:59:59Z")) == 6);
    CHECK(whole_days_between(a, parse_iso8601("2024-06-08T12:00:00Z")) == 7);
}

TEST_CASE("make_ootd normalizes hashtags and rejects empty item lists") {
    const auto o = make_ootd("o1", "u1", {1, 2}, {"#Denim", " street ", "#", "DENIM"}, Timestamp{});
    CHECK(o.hashtags == std::set<std::string>{"denim", "street"});
    CHECK_THROWS_AS(make_ootd("o2", "u1", {}, {}, Timestamp{}), ContractError);
}

TEST_CASE("push_recent keeps newest-first order") {
    UserProfile u;
    u.user_id = "u";
    const auto t0 = parse_iso8601("2024-01-01T00:00:00Z");
    push_recent(u, {"a", InteractionKind::view, t0});
    push_recent(u, {"b", InteractionKind::view, t0 + std::chrono::hours(5)});
    push_recent(u, {"c", InteractionKind::like, t0 + std::chrono::hours(2)});
    push_recent(u, {"d", InteractionKind::like, t0 + std::chrono::hours(5)});
    REQUIRE(u.recent_interactions.size() == 4);
    CHECK(u.recent_interactions[0].ootd_id == "d");
    CHECK(u.recent_interactions[1].ootd_id == "b");
    CHECK(u.recent_interactions[2].ootd_id == "c");
    CHECK(u.recent_interactions[3].ootd_id == "a");
    CHECK_NOTHROW(validate_user(u));
}

TEST_CASE("validate_user rejects self-follow and unsorted history") {
    UserProfile u;
    u.user_id = "u";
    u.follows.insert("u");
    CHECK_THROWS_AS(validate_user(u), ContractError);
    u.follows.clear();
    const auto t0 = parse_iso8601("2024-01-01T00:00:00Z");
    u.recent_interactions = {{"a", InteractionKind::view, t0}, {"b", InteractionKind::view, t0 + std::chrono::hours(1)}};
    CHECK_THROWS_AS(validate_user(u), ContractError);
}

TEST_CASE("validate_item checks sub-category, dimensions and finiteness") {
    EmbeddingDims dims{2, 2, 3};
    ItemRecord it;
    it.item_id = 9;
    it.sub_category = "shirt";
    it.classifier_embedding = {1, 2};
    it.tagger_embedding = {3, 4};
    it.search_embedding = {5, 6, 7};
    const auto& h = CategoryHierarchy::default_hierarchy();
    CHECK_NOTHROW(validate_item(it, h, dims));
    CHECK(item_vector(it) == std::vector<double>{1, 2, 3, 4, 5, 6, 7});

    auto wrong_dim = it;
    wrong_dim.search_embedding.pop_back();
    CHECK_THROWS_AS(validate_item(wrong_dim, h, dims), SchemaError);
    auto nan = it;
    nan.tagger_embedding[0] = std::nanf("");
    CHECK_THROWS_AS(validate_item(nan, h, dims), SchemaError);
    auto unknown = it;
    unknown.sub_category = "cape";
    CHECK_THROWS_AS(validate_item(unknown, h, dims), ContractError);
}

TEST_CASE("interaction kinds round trip through their names") {
    for (auto k : {InteractionKind::view, InteractionKind::like, InteractionKind::upload, InteractionKind::follow}) {
        CHECK(parse_interaction_kind(to_string(k)) == k);
    }
    CHECK_FALSE(parse_interaction_kind("poke").has_value());
}
