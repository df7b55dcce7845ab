#include "itoo/ingest/dedup.hpp"

#include <map>

#include "itoo/core/errors.hpp"

namespace itoo {

std::vector<std::size_t> dedup(const std::vector<PerceptualHash>& hashes, int hamming_threshold) {
    if (hamming_threshold < 0 || hamming_threshold > 64) {
        throw ContractError("dedup: hamming threshold must be in [0, 64]");
    }
    std::vector<std::size_t> kept;
    std::vector<PerceptualHash> kept_hashes;
    for (std::size_t i = 0; i < hashes.size(); ++i) {
        bool duplicate = false;
        for (const auto& k : kept_hashes) {
            if (hamming_distance(hashes[i], k) <= hamming_threshold) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) {
            kept.push_back(i);
            kept_hashes.push_back(hashes[i]);
        }
    }
    return kept;
}

std::vector<std::size_t> dedup(const std::vector<RasterImage>& images, int hamming_threshold) {
    std::vector<PerceptualHash> hashes;
    hashes.reserve(images.size());
    for (const auto& img : images) hashes.push_back(average_hash(img));
    return dedup(hashes, hamming_threshold);
}

std::vector<std::string> category_consistency_filter(const std::vector<CropLabel>& crops,
                                                     const CategoryHierarchy& h) {
    std::vector<std::string> kept;
    for (const auto& c : crops) {
        if (!h.has_super(c.detector_super)) {
            throw ContractError("crop '" + c.crop_id + "': unknown super-category '" + c.detector_super + "'");
        }
        if (h.require_super(c.classifier_sub) == c.detector_super) kept.push_back(c.crop_id);
    }
    return kept;
}

std::vector<ClassLabel> color_separate(const std::vector<ColoredItem>& items) {
    std::map<std::pair<std::string, std::optional<std::string>>, ClassId> classes;
    std::vector<ClassLabel> out;
    out.reserve(items.size());
    for (const auto& it : items) {
        auto key = std::make_pair(it.item_id, it.color_tag);
        auto [pos, inserted] = classes.try_emplace(key, static_cast<ClassId>(classes.size()));
        out.push_back(ClassLabel{pos->second, it.item_id, it.color_tag});
    }
    return out;
}

}  // namespace itoo
