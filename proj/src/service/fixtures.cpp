#include "itoo/service/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "itoo/core/errors.hpp"
#include "itoo/ingest/labels.hpp"
#include "itoo/metric/table.hpp"

namespace itoo {

const std::vector<std::pair<std::string, std::vector<std::string>>>& fixture_styles() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> styles = {
        {"casual", {"casual", "daily", "comfy"}},     {"street", {"street", "hiphop", "oversized"}},
        {"formal", {"formal", "office", "classic"}},  {"denim", {"denim", "jeans", "washed"}},
        {"sporty", {"sporty", "athleisure", "gym"}},  {"minimal", {"minimal", "monotone", "clean"}},
    };
    return styles;
}

namespace {

const std::vector<std::string> kColors = {"white", "black", "grey", "red", "blue", "navy", "beige", "pink", "green"};
const std::vector<std::pair<std::string, std::vector<std::string>>> kAttributes = {
    {"fit", {"slim", "regular", "loose"}},
    {"pattern", {"solid", "stripe", "check", "print"}},
    {"length", {"short", "regular", "long"}},
};

using Rng = std::mt19937_64;

std::vector<double> gauss(std::size_t n, Rng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

std::vector<float> combine(const std::vector<std::pair<double, const std::vector<double>*>>& terms, bool unit) {
    const std::size_t n = terms.front().second->size();
    std::vector<double> acc(n, 0.0);
    for (const auto& [w, v] : terms) {
        for (std::size_t i = 0; i < n; ++i) acc[i] += w * (*v)[i];
    }
    double norm = 1.0;
    if (unit) {
        norm = 0.0;
        for (double x : acc) norm += x * x;
        norm = std::sqrt(norm);
    }
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

std::size_t pick(std::size_t n, Rng& rng) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::string padded(const char* prefix, std::size_t i, int width) {
    std::string s = std::to_string(i);
    return prefix + std::string(std::max(0, width - static_cast<int>(s.size())), '0') + s;
}

}  // namespace

FixtureData make_fixture_data(const FixtureSpec& spec, const CategoryHierarchy& h) {
    Rng rng(spec.seed);
    const auto& styles = fixture_styles();
    const std::size_t S = styles.size();
    const auto& dims = spec.dims;

    std::vector<std::vector<double>> style_s, style_c, style_t;
    for (std::size_t s = 0; s < S; ++s) {
        style_s.push_back(gauss(dims.search, rng));
        style_c.push_back(gauss(dims.classifier, rng));
        style_t.push_back(gauss(dims.tagger, rng));
    }
    std::map<std::string, std::vector<double>> color_t;
    for (const auto& c : kColors) color_t[c] = gauss(dims.tagger, rng);

    FixtureData out;
    auto& md = out.metadata;
    std::map<std::string, std::vector<std::pair<ItemId, std::size_t>>> by_super;  // (item, style)
    ItemId next_id = 1;
    for (const auto& e : h.entries()) {
        const auto center_s = gauss(dims.search, rng);
        const auto center_c = gauss(dims.classifier, rng);
        for (std::size_t j = 0; j < spec.items_per_sub; ++j) {
            const std::size_t style = pick(S, rng);
            ItemRecord it;
            it.item_id = next_id++;
            it.sub_category = e.sub;
            it.color_tag = kColors[pick(kColors.size(), rng)];
            for (const auto& [group, values] : kAttributes) it.attribute_tags.emplace(group, values[pick(values.size(), rng)]);
            const auto ns = gauss(dims.search, rng);
            const auto nc = gauss(dims.classifier, rng);
            const auto nt = gauss(dims.tagger, rng);
            it.search_embedding = combine({{1.5, &center_s}, {1.2, &style_s[style]}, {0.5, &ns}}, true);
            it.classifier_embedding = combine({{1.5, &center_c}, {0.4, &style_c[style]}, {0.3, &nc}}, false);
            it.tagger_embedding = combine({{1.0, &style_t[style]}, {0.8, &color_t[it.color_tag]}, {0.3, &nt}}, false);
            by_super[e.super].push_back({it.item_id, style});
            md.items.push_back(std::move(it));
        }
    }

    std::vector<std::size_t> user_style;
    for (std::size_t u = 0; u < spec.users; ++u) {
        UserProfile p;
        p.user_id = padded("u", u + 1, 3);
        p.demographics.gender = uniform(rng) < 0.5 ? "f" : "m";
        p.demographics.birth_year = 1975 + static_cast<int>(pick(30, rng));
        const std::size_t style = pick(S, rng);
        user_style.push_back(style);
        const auto& tags = styles[style].second;
        p.preference_tags.insert(tags[pick(tags.size(), rng)]);
        p.preference_tags.insert(tags[pick(tags.size(), rng)]);
        if (uniform(rng) < 0.3) p.preference_tags.insert(styles[pick(S, rng)].second[0]);
        md.users.push_back(std::move(p));
    }
    for (std::size_t u = 0; u < spec.users && spec.users > 1; ++u) {
        const std::size_t n = pick(5, rng);
        for (std::size_t f = 0; f < n; ++f) {
            std::size_t v = pick(spec.users, rng);
            if (uniform(rng) < 0.6) {
                for (int tries = 0; tries < 8 && user_style[v] != user_style[u]; ++tries) v = pick(spec.users, rng);
            }
            if (v != u) md.users[u].follows.insert(md.users[v].user_id);
        }
    }

    const auto day = std::chrono::seconds(86400);
    std::vector<std::size_t> ootd_style;
    for (std::size_t i = 0; i < spec.ootds && spec.users > 0; ++i) {
        const std::size_t uploader = pick(spec.users, rng);
        const std::size_t style = uniform(rng) < 0.7 ? user_style[uploader] : pick(S, rng);
        std::vector<std::string> supers;
        if (uniform(rng) < 0.3) supers = {"dress"};
        else supers = {"top", "bottom"};
        supers.push_back("shoes");
        if (uniform(rng) < 0.4) supers.push_back("outer");
        if (uniform(rng) < 0.4) supers.push_back("bag");
        std::vector<ItemId> items;
        for (const auto& sup : supers) {
            const auto& pool = by_super[sup];
            if (pool.empty()) continue;
            std::vector<ItemId> matching;
            for (const auto& [id, st] : pool) {
                if (st == style) matching.push_back(id);
            }
            items.push_back(matching.empty() ? pool[pick(pool.size(), rng)].first : matching[pick(matching.size(), rng)]);
        }
        if (items.empty()) continue;
        const auto& tags = styles[style].second;
        std::vector<std::string> hashtags = {tags[pick(tags.size(), rng)], tags[pick(tags.size(), rng)]};
        if (uniform(rng) < 0.3) hashtags.emplace_back("ootd");
        const auto age = std::chrono::seconds(static_cast<long long>(uniform(rng) * 100.0 * 86400.0));
        md.ootds.push_back(make_ootd(padded("o", i + 1, 4), md.users[uploader].user_id, std::move(items), hashtags,
                                     spec.base_time - age));
        ootd_style.push_back(style);
    }

    auto& ev = out.events;
    for (const auto& o : md.ootds) ev.push_back({o.created_at, o.uploader_id, InteractionKind::upload, o.ootd_id});
    const std::size_t active = spec.users - std::min(spec.stale_users, spec.users);
    for (std::size_t u = 0; u < spec.users && !md.ootds.empty(); ++u) {
        const bool stale = u >= active;
        std::vector<std::size_t> preferred, pool;
        for (std::size_t i = 0; i < md.ootds.size(); ++i) {
            if (stale && md.ootds[i].created_at > spec.base_time - 80 * day) continue;
            pool.push_back(i);
            if (ootd_style[i] == user_style[u]) preferred.push_back(i);
        }
        if (pool.empty()) continue;
        const std::size_t n = stale ? 5 : spec.views_per_user;
        const Timestamp horizon = stale ? spec.base_time - 75 * day : spec.base_time;
        for (std::size_t k = 0; k < n; ++k) {
            const bool pref = !preferred.empty() && uniform(rng) < 0.7;
            const std::size_t i = pref ? preferred[pick(preferred.size(), rng)] : pool[pick(pool.size(), rng)];
            const auto& o = md.ootds[i];
            const auto span = std::max<long long>(0, (horizon - o.created_at).count());
            const Timestamp t = o.created_at + std::chrono::seconds(static_cast<long long>(uniform(rng) * span));
            ev.push_back({t, md.users[u].user_id, InteractionKind::view, o.ootd_id});
            if (uniform(rng) < (ootd_style[i] == user_style[u] ? 0.4 : 0.05)) {
                ev.push_back({std::min(horizon, t + std::chrono::seconds(60)), md.users[u].user_id,
                               InteractionKind::like, o.ootd_id});
            }
        }
    }
    std::stable_sort(ev.begin(), ev.end(),
                     [](const InteractionEvent& a, const InteractionEvent& b) { return a.timestamp < b.timestamp; });
    return out;
}

namespace {

struct Rgb {
    std::uint8_t r, g, b;
};

const std::map<std::string, Rgb>& image_palette() {
    static const std::map<std::string, Rgb> p = {
        {"red", {200, 30, 40}},   {"blue", {40, 90, 220}},  {"green", {40, 150, 60}}, {"black", {20, 20, 20}},
        {"navy", {20, 30, 90}},   {"pink", {240, 150, 180}}, {"brown", {120, 75, 40}}, {"yellow", {240, 220, 50}},
        {"purple", {120, 50, 160}},
    };
    return p;
}

struct Slot {
    const char* super;
    int x, y, w, h;
};

// Box sizes are multiples of 8 so every texture cell maps onto one hash cell.
constexpr Slot kTop{"top", 24, 16, 64, 56};
constexpr Slot kBottom{"bottom", 32, 80, 48, 64};
constexpr Slot kDress{"dress", 24, 16, 64, 128};
constexpr Slot kShoes{"shoes", 32, 152, 48, 24};
constexpr Slot kBag{"bag", 96, 72, 24, 32};
constexpr int kCanvasW = 128;
constexpr int kCanvasH = 192;

void paint(RasterImage& img, const Slot& s, Rgb base, std::uint64_t bits) {
    const Rgb light{static_cast<std::uint8_t>(base.r + (255 - base.r) / 2),
                    static_cast<std::uint8_t>(base.g + (255 - base.g) / 2),
                    static_cast<std::uint8_t>(base.b + (255 - base.b) / 2)};
    const Rgb dark{static_cast<std::uint8_t>(base.r * 0.55), static_cast<std::uint8_t>(base.g * 0.55),
                   static_cast<std::uint8_t>(base.b * 0.55)};
    const int cw = s.w / 8, ch = s.h / 8;
    for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
            const int cell = (y / ch) * 8 + (x / cw);
            const bool on = (bits >> (63 - cell)) & 1ULL;
            const Rgb c = on ? light : dark;
            auto* p = img.at(s.x + x, s.y + y);
            p[0] = c.r;
            p[1] = c.g;
            p[2] = c.b;
        }
    }
}

}  // namespace

std::vector<SyntheticUpload> make_synthetic_uploads(std::size_t n, std::uint64_t seed,
                                                    const std::vector<UserId>& uploaders, AnnotationBook& book,
                                                    const CategoryHierarchy& h) {
    if (n > 0 && uploaders.empty()) throw ContractError("synthetic uploads need at least one uploader");
    Rng rng(seed);
    const auto& palette = image_palette();
    std::vector<std::string> colors;
    for (const auto& [name, _] : palette) colors.push_back(name);
    const auto& styles = fixture_styles();
    std::set<std::uint64_t> used;
    for (const auto& [hash, _] : book.crops) used.insert(hash);
    for (const auto& [hash, _] : book.boxes) used.insert(hash);

    auto fresh_bits = [&] {
        while (true) {
            const std::uint64_t b = rng();
            const int pop = __builtin_popcountll(b);
            if (pop >= 8 && pop <= 56 && !used.count(b)) return b;
        }
    };

    std::vector<SyntheticUpload> out;
    for (std::size_t i = 0; i < n; ++i) {
        SyntheticUpload up;
        up.name = padded("upload_", i, 3);
        up.uploader = uploaders[i % uploaders.size()];
        const auto& tags = styles[pick(styles.size(), rng)].second;
        up.hashtags = {tags[pick(tags.size(), rng)], tags[pick(tags.size(), rng)]};

        std::vector<Slot> slots;
        if (uniform(rng) < 0.3) slots = {kDress};
        else slots = {kTop, kBottom};
        slots.push_back(kShoes);
        if (uniform(rng) < 0.5) slots.push_back(kBag);

        while (true) {
            RasterImage img(kCanvasW, kCanvasH, 240, 240, 240);
            std::vector<std::uint64_t> crop_bits;
            up.boxes.clear();
            up.crops.clear();
            double conf = 0.95;
            for (const auto& s : slots) {
                const auto& color = colors[pick(colors.size(), rng)];
                const auto bits = fresh_bits();
                paint(img, s, palette.at(color), bits);
                crop_bits.push_back(bits);
                const auto subs = h.subs_of(s.super);
                up.boxes.push_back({s.x, s.y, s.w, s.h, s.super, conf});
                conf -= 0.05;
                up.crops.push_back({subs[pick(subs.size(), rng)], color,
                                    {{"pattern", "check"}, {"fit", kAttributes[0].second[pick(3, rng)]}}});
            }
            const auto whole = average_hash(img).bits;
            bool ok = !used.count(whole);
            for (std::size_t c = 0; c < crop_bits.size() && ok; ++c) {
                ok = average_hash(img.crop(up.boxes[c].x, up.boxes[c].y, up.boxes[c].w, up.boxes[c].h)).bits ==
                     crop_bits[c];
            }
            if (!ok) continue;
            used.insert(whole);
            for (std::size_t c = 0; c < crop_bits.size(); ++c) {
                used.insert(crop_bits[c]);
                book.crops[crop_bits[c]] = up.crops[c];
            }
            book.boxes[whole] = up.boxes;
            up.image = std::move(img);
            break;
        }
        out.push_back(std::move(up));
    }
    return out;
}

FixtureSummary write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec) {
    namespace fs = std::filesystem;
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        throw ContractError("fixture directory " + dir.string() + " is not empty");
    }
    fs::create_directories(dir / "uploads");
    fs::create_directories(dir / "metric");
    const auto& h = CategoryHierarchy::default_hierarchy();
    h.save(dir / "hierarchy.tsv");

    auto data = make_fixture_data(spec, h);
    save_metadata(dir / "metadata.jsonl", data.metadata);
    EmbeddingFile cls{static_cast<std::uint32_t>(spec.dims.classifier), {}};
    EmbeddingFile tag{static_cast<std::uint32_t>(spec.dims.tagger), {}};
    EmbeddingFile search{static_cast<std::uint32_t>(spec.dims.search), {}};
    for (const auto& it : data.metadata.items) {
        cls.vectors[it.item_id] = it.classifier_embedding;
        tag.vectors[it.item_id] = it.tagger_embedding;
        search.vectors[it.item_id] = it.search_embedding;
    }
    save_embeddings(dir / "classifier.vec", cls);
    save_embeddings(dir / "tagger.vec", tag);
    save_embeddings(dir / "search.vec", search);
    save_interactions(dir / "interactions.csv", data.events);

    std::vector<UserId> uploaders;
    for (const auto& u : data.metadata.users) uploaders.push_back(u.user_id);
    AnnotationBook book;
    const auto uploads = make_synthetic_uploads(spec.uploads, spec.seed ^ 0x5EEDULL, uploaders, book, h);
    save_annotations(dir / "annotations.jsonl", book);
    {
        std::ofstream manifest(dir / "uploads" / "manifest.jsonl");
        for (const auto& up : uploads) {
            write_ppm(dir / "uploads" / (up.name + ".ppm"), up.image);
            manifest << nlohmann::json{{"file", up.name + ".ppm"},
                                       {"ootd_id", up.name},
                                       {"user_id", up.uploader},
                                       {"hashtags", up.hashtags}}
                            .dump()
                     << "\n";
        }
    }
    {
        std::ofstream dag(dir / "dag.txt");
        dag << "# nightly snapshot rebuild\n"
               "load_metadata:\n"
               "load_interactions:\n"
               "load_embeddings:\n"
               "style_vectors: load_metadata load_embeddings\n"
               "tfidf_profiles: load_interactions\n"
               "index_top: load_embeddings load_metadata\n"
               "index_bottom: load_embeddings load_metadata\n"
               "index_shoes: load_embeddings load_metadata\n"
               "swap_snapshot: style_vectors tfidf_profiles index_top index_bottom index_shoes\n";
    }
    {
        std::vector<LabeledImage> labels;
        std::vector<ImageId> ids;
        for (ClassId c = 0; c < 200; ++c) {
            for (ImageId k = 0; k < 3; ++k) {
                const ImageId id = c * 3 + k + 1;
                labels.push_back({id, c, "default"});
                ids.push_back(id);
            }
        }
        save_labels(dir / "metric" / "labels.csv", labels);
        EmbeddingTable::random(ids, 32, spec.seed).save(dir / "metric" / "init.vec");
    }
    {
        std::ofstream conf(dir / "itoo.conf");
        conf << "# relative data_dir resolves against this file's directory\n"
                "data_dir = .\n"
                "index.shards = 2\n";
    }
    return {data.metadata.items.size(), data.metadata.ootds.size(), data.metadata.users.size(), data.events.size(),
            uploads.size()};
}

}  // namespace itoo
