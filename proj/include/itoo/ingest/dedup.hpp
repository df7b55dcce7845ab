#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "itoo/core/hierarchy.hpp"
#include "itoo/ingest/image.hpp"
#include "itoo/ingest/labels.hpp"

namespace itoo {

/// Greedy first-seen-wins: index i is kept unless its hash lies within
/// `hamming_threshold` bits of an already kept hash. Returns kept indices ascending.
std::vector<std::size_t> dedup(const std::vector<PerceptualHash>& hashes, int hamming_threshold);
std::vector<std::size_t> dedup(const std::vector<RasterImage>& images, int hamming_threshold);

struct CropLabel {
    std::string crop_id;
    std::string detector_super;
    std::string classifier_sub;
};

/// Keeps crops whose classifier sub-category belongs to the detector's super-category.
std::vector<std::string> category_consistency_filter(const std::vector<CropLabel>& crops,
                                                     const CategoryHierarchy& h);

struct ColoredItem {
    std::string item_id;
    std::optional<std::string> color_tag;
};

/// One class per distinct (item_id, color_tag); class ids assigned in first-seen order.
/// Output is parallel to the input.
std::vector<ClassLabel> color_separate(const std::vector<ColoredItem>& items);

}  // namespace itoo
