#include "itoo/pipeline/plugins.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "itoo/core/errors.hpp"

namespace itoo {

std::vector<std::string> ModelPlugins::missing() const {
    std::vector<std::string> m;
    if (!detector) m.emplace_back("detector");
    if (!classifier) m.emplace_back("classifier");
    if (!tagger) m.emplace_back("tagger");
    if (!embedder) m.emplace_back("embedder");
    return m;
}

namespace {

struct PaletteColor {
    const char* name;
    double r, g, b;
};

constexpr std::array<PaletteColor, 13> kPalette{{
    {"white", 245, 245, 245},
    {"black", 20, 20, 20},
    {"grey", 128, 128, 128},
    {"red", 200, 30, 40},
    {"orange", 240, 140, 30},
    {"yellow", 240, 220, 50},
    {"green", 40, 150, 60},
    {"blue", 40, 90, 220},
    {"navy", 20, 30, 90},
    {"purple", 120, 50, 160},
    {"pink", 240, 150, 180},
    {"brown", 120, 75, 40},
    {"beige", 220, 200, 160},
}};

constexpr int kGrid = 8;

// Mean RGB of each cell of an 8x8 grid, scaled to [-0.5, 0.5].
std::vector<double> grid_features(const RasterImage& img) {
    std::vector<double> f(kGrid * kGrid * 3, 0.0);
    for (int gy = 0; gy < kGrid; ++gy) {
        const int y0 = gy * img.height() / kGrid;
        const int y1 = std::max(y0 + 1, (gy + 1) * img.height() / kGrid);
        for (int gx = 0; gx < kGrid; ++gx) {
            const int x0 = gx * img.width() / kGrid;
            const int x1 = std::max(x0 + 1, (gx + 1) * img.width() / kGrid);
            double s[3] = {0, 0, 0};
            for (int y = y0; y < std::min(y1, img.height()); ++y) {
                for (int x = x0; x < std::min(x1, img.width()); ++x) {
                    const auto* p = img.at(x, y);
                    for (int c = 0; c < 3; ++c) s[c] += p[c];
                }
            }
            const double n = static_cast<double>((std::min(y1, img.height()) - y0) * (std::min(x1, img.width()) - x0));
            for (int c = 0; c < 3; ++c) f[(gy * kGrid + gx) * 3 + c] = s[c] / n / 255.0 - 0.5;
        }
    }
    return f;
}

std::array<double, 3> mean_rgb(const RasterImage& img) {
    std::array<double, 3> m{0, 0, 0};
    const auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); i += 3) {
        for (int c = 0; c < 3; ++c) m[c] += px[i + c];
    }
    const double n = static_cast<double>(px.size() / 3);
    for (double& x : m) x /= n;
    return m;
}

}  // namespace

std::string nearest_color_name(double r, double g, double b) {
    const PaletteColor* best = &kPalette[0];
    double bd = std::numeric_limits<double>::infinity();
    for (const auto& c : kPalette) {
        const double d = (c.r - r) * (c.r - r) + (c.g - g) * (c.g - g) + (c.b - b) * (c.b - b);
        if (d < bd) {
            bd = d;
            best = &c;
        }
    }
    return best->name;
}

namespace {

// Random Gaussian projection of the grid features; unit-normalized when `unit`.
class Projection {
public:
    Projection(std::size_t out_dim, std::uint64_t seed) : out_(out_dim), w_(out_dim * kIn) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& x : w_) x = normal(rng);
    }

    std::vector<float> apply(const std::vector<double>& f, bool unit) const {
        std::vector<double> z(out_, 0.0);
        for (std::size_t r = 0; r < out_; ++r) {
            const double* row = w_.data() + r * kIn;
            double s = 0.0;
            for (std::size_t c = 0; c < kIn; ++c) s += row[c] * f[c];
            z[r] = s;
        }
        double n = 1.0;
        if (unit) {
            n = 0.0;
            for (double x : z) n += x * x;
            n = std::sqrt(n);
        }
        std::vector<float> out(out_, 0.0f);
        if (n == 0.0) {
            if (out_ > 0) out[0] = 1.0f;
            return out;
        }
        for (std::size_t i = 0; i < out_; ++i) out[i] = static_cast<float>(z[i] / n);
        return out;
    }

private:
    static constexpr std::size_t kIn = kGrid * kGrid * 3;
    std::size_t out_;
    std::vector<double> w_;
};

}  // namespace

ModelPlugins stub_plugins(std::uint64_t seed, AnnotationBook book, const CategoryHierarchy& h,
                          const EmbeddingDims& dims) {
    if (dims.search == 0) throw ContractError("embedder dimension must be positive");
    auto shared = std::make_shared<const AnnotationBook>(std::move(book));
    std::vector<std::string> subs;
    for (const auto& e : h.entries()) subs.push_back(e.sub);
    if (subs.empty()) throw ContractError("hierarchy has no sub-categories");

    auto embed = std::make_shared<const Projection>(dims.search, seed);
    auto cls_proj = std::make_shared<const Projection>(dims.classifier, seed ^ 0xC1A55ULL);
    auto tag_proj = std::make_shared<const Projection>(dims.tagger, seed ^ 0x7A66ULL);

    ModelPlugins p;
    p.embed_dim = dims.search;
    p.dims = dims;
    p.detector = [shared](const RasterImage& img) {
        const auto it = shared->boxes.find(average_hash(img).bits);
        return it == shared->boxes.end() ? std::vector<BoundingBox>{} : it->second;
    };
    p.classifier = [shared, subs, cls_proj](const RasterImage& crop) {
        const auto hash = average_hash(crop).bits;
        auto repr = cls_proj->apply(grid_features(crop), false);
        const auto it = shared->crops.find(hash);
        if (it != shared->crops.end()) return Classification{it->second.sub_category, 1.0, std::move(repr)};
        return Classification{subs[hash % subs.size()], 0.5, std::move(repr)};
    };
    p.tagger = [shared, tag_proj](const RasterImage& crop) {
        auto repr = tag_proj->apply(grid_features(crop), false);
        const auto it = shared->crops.find(average_hash(crop).bits);
        if (it != shared->crops.end()) return TagOutput{it->second.color, it->second.attributes, std::move(repr)};
        const auto m = mean_rgb(crop);
        return TagOutput{nearest_color_name(m[0], m[1], m[2]), {}, std::move(repr)};
    };
    p.embedder = [embed](const RasterImage& crop) { return embed->apply(grid_features(crop), true); };
    return p;
}

std::string hash_hex(std::uint64_t bits) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << bits;
    return os.str();
}

namespace {

std::uint64_t parse_hash(const nlohmann::json& j) {
    const auto s = j.get<std::string>();
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size() || s.empty()) throw ContractError("bad hash '" + s + "'");
    return v;
}

}  // namespace

AnnotationBook load_annotations(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open annotations " + path.string());
    AnnotationBook book;
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto type = j.at("type").get<std::string>();
            const auto hash = parse_hash(j.at("hash"));
            if (type == "image") {
                auto& boxes = book.boxes[hash];
                for (const auto& b : j.at("boxes")) {
                    boxes.push_back({b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(),
                                     b.at("h").get<int>(), b.at("super_category").get<std::string>(),
                                     b.at("confidence").get<double>()});
                }
            } else if (type == "crop") {
                CropAnnotation c{j.at("sub_category").get<std::string>(), j.value("color", std::string{}), {}};
                for (const auto& a : j.value("attributes", nlohmann::json::array())) {
                    c.attributes.emplace(a.at(0).get<std::string>(), a.at(1).get<std::string>());
                }
                book.crops[hash] = std::move(c);
            } else {
                throw ContractError("unknown annotation type '" + type + "'");
            }
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("annotations: ") + e.what(), lineno);
        }
    }
    return book;
}

void save_annotations(const std::filesystem::path& path, const AnnotationBook& book) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write annotations " + path.string());
    for (const auto& [hash, boxes] : book.boxes) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& b : boxes) {
            arr.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"super_category", b.super_category},
                           {"confidence", b.confidence}});
        }
        f << nlohmann::json{{"type", "image"}, {"hash", hash_hex(hash)}, {"boxes", arr}}.dump() << "\n";
    }
    for (const auto& [hash, c] : book.crops) {
        nlohmann::json attrs = nlohmann::json::array();
        for (const auto& [g, v] : c.attributes) attrs.push_back({g, v});
        f << nlohmann::json{{"type", "crop"},  {"hash", hash_hex(hash)}, {"sub_category", c.sub_category},
                            {"color", c.color}, {"attributes", attrs}}
                 .dump()
          << "\n";
    }
}

}  // namespace itoo
