#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace itoo {

using ClassId = std::uint32_t;
using ImageId = std::uint64_t;

/// Same-item class used as the metric-learning target.
struct ClassLabel {
    ClassId class_id = 0;
    std::string source_item_id;
    std::optional<std::string> color_tag;
};

/// One labeled training image. `source` names the dataset it came from (for re-sampling).
struct LabeledImage {
    ImageId image_id = 0;
    ClassId class_id = 0;
    std::string source = "default";
};

/// CSV `image_id,class_id` with an optional third `source` column and optional header.
std::vector<LabeledImage> load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const std::vector<LabeledImage>& labels);

}  // namespace itoo
