#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

#include "itoo/core/errors.hpp"
#include "itoo/ingest/dedup.hpp"
#include "itoo/ingest/image.hpp"
#include "itoo/ingest/json_codec.hpp"
#include "itoo/ingest/labels.hpp"
#include "itoo/ingest/loaders.hpp"
#include "test_support.hpp"

using namespace itoo;
using itoo::testing::TempDir;

namespace {

RasterImage half_black_half_white(int w, int h) {
    RasterImage img(w, h, 255, 255, 255);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w / 2; ++x) {
            auto* p = img.at(x, y);
            p[0] = p[1] = p[2] = 0;
        }
    }
    return img;
}

RasterImage noise(int w, int h, std::uint64_t seed, int lo = 20, int hi = 235) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> v(lo, hi);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(3 * w * h));
    for (auto& b : px) b = static_cast<std::uint8_t>(v(rng));
    return RasterImage(w, h, std::move(px));
}

void paste(RasterImage& dst, const RasterImage& src, int y0) {
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            const auto* s = src.at(x, y);
            auto* d = dst.at(x, y0 + y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
        }
    }
}

}  // namespace

TEST_CASE("average hash of a left-black right-white image is 0x0F0F0F0F0F0F0F0F") {
    CHECK(average_hash(half_black_half_white(64, 64)).bits == 0x0F0F0F0F0F0F0F0FULL);
    CHECK(average_hash(half_black_half_white(16, 8)).bits == 0x0F0F0F0F0F0F0F0FULL);
}

TEST_CASE("average hash of a uniform image sets every bit") {
    CHECK(average_hash(RasterImage(20, 12, 128, 128, 128)).bits == ~0ULL);
}

TEST_CASE("average hash is invariant under a small brightness shift") {
    const auto base = noise(32, 32, 11);
    for (int shift : {-10, 10}) {
        auto shifted = base;
        std::vector<std::uint8_t> px(base.pixels().begin(), base.pixels().end());
        for (auto& b : px) b = static_cast<std::uint8_t>(b + shift);
        shifted = RasterImage(32, 32, std::move(px));
        CHECK(average_hash(shifted) == average_hash(base));
    }
    CHECK(hamming_distance(average_hash(base), average_hash(base)) == 0);
}

TEST_CASE("hamming distance counts differing bits") {
    CHECK(hamming_distance({0b1011}, {0b0001}) == 2);
    CHECK(hamming_distance({0}, {~0ULL}) == 64);
}

TEST_CASE("dedup keeps first-seen representatives") {
    const PerceptualHash a{0xF0F0}, b{0x1234'5678'9ABC'DEF0ULL};
    CHECK(dedup({a, a, b}, 0) == std::vector<std::size_t>{0, 2});
    CHECK(dedup({a, b}, 0) == std::vector<std::size_t>{0, 1});
    const PerceptualHash a3{0xF0F0 ^ 0b10101};
    REQUIRE(hamming_distance(a, a3) == 3);
    CHECK(dedup({a, a3}, 4) == std::vector<std::size_t>{0});
    CHECK(dedup({a, a3}, 2) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("dedup is idempotent") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        std::vector<PerceptualHash> hs;
        for (int i = 0; i < 30; ++i) hs.push_back({rng() & 0xFFULL});
        const auto kept = dedup(hs, 2);
        std::vector<PerceptualHash> once;
        for (auto i : kept) once.push_back(hs[i]);
        const auto again = dedup(once, 2);
        CHECK(again.size() == once.size());
    }
}

TEST_CASE("split_descriptive_image cuts at wide uniform bands") {
    const auto block = noise(40, 100, 1);
    RasterImage img(40, 240, 255, 255, 255);
    paste(img, block, 0);
    paste(img, noise(40, 100, 2), 140);
    const auto parts = split_descriptive_image(img, 16, 2);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].height() == 100);
    CHECK(parts[1].height() == 100);
    CHECK(parts[0] == block);

    CHECK(split_descriptive_image(noise(30, 50, 3), 16, 2).size() == 1);
    CHECK(split_descriptive_image(RasterImage(30, 50, 255, 255, 255), 16, 2).empty());
}

TEST_CASE("split_descriptive_image ignores bands narrower than the gap") {
    RasterImage img(40, 210, 255, 255, 255);
    paste(img, noise(40, 100, 4), 0);
    paste(img, noise(40, 100, 5), 110);
    const auto parts = split_descriptive_image(img, 16, 2);
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].height() <= img.height());
}

TEST_CASE("category_consistency_filter keeps matching crops in order") {
    const auto& h = CategoryHierarchy::default_hierarchy();
    const std::vector<CropLabel> crops = {{"c1", "top", "t-shirt"},
                                          {"c2", "top", "sneakers"},
                                          {"c3", "bottom", "jeans"},
                                          {"c4", "bag", "coat"},
                                          {"c5", "shoes", "boots"}};
    CHECK(category_consistency_filter(crops, h) == std::vector<std::string>{"c1", "c3", "c5"});
    CHECK_THROWS_AS(category_consistency_filter({{"x", "top", "cape"}}, h), ContractError);
}

TEST_CASE("color_separate makes one class per item and color") {
    const auto three = color_separate({{"A", "red"}, {"A", "blue"}, {"B", "red"}});
    std::set<ClassId> ids;
    for (const auto& l : three) ids.insert(l.class_id);
    CHECK(ids.size() == 3);

    const auto one = color_separate({{"A", "red"}, {"A", "red"}});
    CHECK(one[0].class_id == one[1].class_id);

    std::vector<ColoredItem> fashion;
    for (int i = 0; i < 4; ++i) fashion.push_back({"item", "red"});
    for (int i = 0; i < 3; ++i) fashion.push_back({"item", "blue"});
    std::map<ClassId, int> sizes;
    for (const auto& l : color_separate(fashion)) ++sizes[l.class_id];
    CHECK(sizes.size() == 2);
    CHECK(sizes[0] == 4);
    CHECK(sizes[1] == 3);

    const auto untagged = color_separate({{"A", std::nullopt}, {"A", std::nullopt}, {"A", "red"}});
    CHECK(untagged[0].class_id == untagged[1].class_id);
    CHECK(untagged[0].class_id != untagged[2].class_id);
}

TEST_CASE("color_separate refines the item partition") {
    std::mt19937_64 rng(9);
    std::vector<ColoredItem> items;
    const std::vector<std::string> colors = {"red", "blue", "black"};
    for (int i = 0; i < 200; ++i) items.push_back({"i" + std::to_string(rng() % 20), colors[rng() % 3]});
    const auto labels = color_separate(items);
    std::map<ClassId, std::string> owner;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto [it, fresh] = owner.emplace(labels[i].class_id, items[i].item_id);
        CHECK(it->second == items[i].item_id);
    }
}

TEST_CASE("embedding files round trip bit for bit") {
    TempDir dir;
    std::mt19937_64 rng(4);
    std::normal_distribution<float> g;
    EmbeddingFile f;
    f.dim = 16;
    for (ItemId id = 1; id <= 1000; ++id) {
        std::vector<float> v(16);
        for (auto& x : v) x = g(rng);
        f.vectors[id * 7] = v;
    }
    save_embeddings(dir / "a.vec", f);
    const auto back = load_embeddings(dir / "a.vec", 16);
    CHECK(back.dim == 16);
    CHECK(back.vectors == f.vectors);
    save_embeddings(dir / "b.vec", back);
    std::ifstream a(dir / "a.vec", std::ios::binary), b(dir / "b.vec", std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(a)), {}), bb((std::istreambuf_iterator<char>(b)), {});
    CHECK(ba == bb);
    CHECK(ba.size() == 20 + 1000 * (8 + 16 * 4));
}

TEST_CASE("empty embedding file loads as an empty map") {
    TempDir dir;
    save_embeddings(dir / "e.vec", EmbeddingFile{128, {}});
    CHECK(load_embeddings(dir / "e.vec", 128).vectors.empty());
}

TEST_CASE("embedding loader reports schema and parse errors") {
    TempDir dir;
    EmbeddingFile f{128, {{1, std::vector<float>(128, 0.5f)}}};
    save_embeddings(dir / "ok.vec", f);
    CHECK_THROWS_AS(load_embeddings(dir / "ok.vec", 64), SchemaError);

    // a 127-float record under a 128-dim header
    std::ifstream in(dir / "ok.vec", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    bytes.resize(bytes.size() - 4);
    std::ofstream(dir / "short.vec", std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_embeddings(dir / "short.vec"), SchemaError);

    std::ofstream(dir / "magic.vec", std::ios::binary) << std::string(20, 'x');
    CHECK_THROWS_AS(load_embeddings(dir / "magic.vec"), ParseError);
}

TEST_CASE("interaction CSV round trips and reports the failing line") {
    TempDir dir;
    const auto t = parse_iso8601("2024-06-01T10:00:00Z");
    const std::vector<InteractionEvent> events = {{t, "u1", InteractionKind::view, "o1"},
                                                  {t, "u2", InteractionKind::follow, "u1"},
                                                  {t, "u1", InteractionKind::like, "o2"}};
    save_interactions(dir / "i.csv", events);
    CHECK(load_interactions(dir / "i.csv") == events);

    std::ofstream(dir / "bad.csv") << "timestamp_iso8601,user_id,kind,target_id\n"
                                   << "2024-06-01T10:00:00Z,u1,view,o1\n"
                                   << "2024-06-01T10:00:00Z,u1,poke,o1\n";
    try {
        load_interactions(dir / "bad.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.location() == 3);
    }
}

TEST_CASE("metadata JSON lines round trip") {
    TempDir dir;
    Metadata md;
    ItemRecord it;
    it.item_id = 3;
    it.sub_category = "jeans";
    it.color_tag = "blue";
    it.attribute_tags = {{"fit", "slim"}};
    md.items.push_back(it);
    md.ootds.push_back(make_ootd("o1", "u1", {3}, {"#denim"}, parse_iso8601("2024-01-02T03:04:05Z")));
    UserProfile u;
    u.user_id = "u1";
    u.demographics = {"f", 1994};
    u.preference_tags = {"denim"};
    u.follows = {"u2"};
    md.users.push_back(u);
    save_metadata(dir / "m.jsonl", md);
    const auto back = load_metadata(dir / "m.jsonl");
    REQUIRE(back.items.size() == 1);
    CHECK(back.items[0].attribute_tags == it.attribute_tags);
    CHECK(back.items[0].color_tag == "blue");
    REQUIRE(back.ootds.size() == 1);
    CHECK(back.ootds[0].hashtags == std::set<std::string>{"denim"});
    CHECK(back.ootds[0].created_at == md.ootds[0].created_at);
    REQUIRE(back.users.size() == 1);
    CHECK(back.users[0].follows == u.follows);
    CHECK(back.users[0].demographics.birth_year == 1994);
}

TEST_CASE("metadata loader names the failing line") {
    TempDir dir;
    std::ofstream(dir / "m.jsonl") << R"({"type":"user","user_id":"u1","gender":"f","birth_year":1990})" << "\n"
                                   << R"({"type":"alien"})" << "\n";
    try {
        load_metadata(dir / "m.jsonl");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.location() == 2);
    }
}

TEST_CASE("item JSON rejects missing fields") {
    CHECK_THROWS_AS(item_from_json(nlohmann::json{{"item_id", 1}}), ContractError);
}

TEST_CASE("labels CSV accepts an optional source column") {
    TempDir dir;
    std::ofstream(dir / "l.csv") << "image_id,class_id,source\n1,0,deepfashion\n2,0,deepfashion\n3,1,crawl\n";
    const auto labels = load_labels(dir / "l.csv");
    REQUIRE(labels.size() == 3);
    CHECK(labels[2].source == "crawl");
    std::ofstream(dir / "bad.csv") << "1,zero\n";
    CHECK_THROWS_AS(load_labels(dir / "bad.csv"), ParseError);
}

TEST_CASE("PPM round trip and crop clipping") {
    TempDir dir;
    const auto img = noise(13, 7, 8);
    write_ppm(dir / "a.ppm", img);
    CHECK(read_ppm(dir / "a.ppm") == img);
    const auto c = img.crop(10, 5, 10, 10);
    CHECK(c.width() == 3);
    CHECK(c.height() == 2);
    CHECK_THROWS_AS(img.crop(20, 0, 5, 5), ContractError);
    CHECK_THROWS_AS(RasterImage(2, 2, std::vector<std::uint8_t>(5)), ContractError);
}
