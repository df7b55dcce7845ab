#pragma once

#include <string>
#include <vector>

#include "itoo/core/hierarchy.hpp"

namespace itoo {

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    std::string super_category;
    double confidence = 0.0;

    bool operator==(const BoundingBox&) const = default;
};

/// Intersection over union; 0 when either box is empty.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Clips to the image; throws ContractError if nothing is left.
BoundingBox clip_box(const BoundingBox& b, int image_w, int image_h);

struct Classification {
    std::string sub_category;
    double confidence = 0.0;
    std::vector<float> representation;  // f_C; may be empty
};

struct KeptBox {
    BoundingBox box;
    std::string sub_category;
    int source_index = -1;  // index into the detector output; -1 for the fallback box
};

/// Indices of boxes surviving rules 1 and 2 below, in input order.
std::vector<std::size_t> surviving_detections(const std::vector<BoundingBox>& boxes,
                                              const std::vector<std::string>& labels, const CategoryHierarchy& h,
                                              double iou_threshold = 0.3);

/// Detection rules applied after classification:
///  1. drop boxes whose classifier super-category differs from the detector's;
///  2. a dress overlapping top/bottom boxes with IoU > iou_threshold is compared against the
///     most confident of them; the winning side stays, the other is dropped (ties keep the dress);
///  3. if nothing survives, the whole image becomes one box labeled by `whole_image`.
/// `labels` runs parallel to `boxes`. Throws ContractError on unknown sub-categories or a
/// length mismatch.
std::vector<KeptBox> postprocess_detections(const std::vector<BoundingBox>& boxes,
                                            const std::vector<std::string>& labels,
                                            const Classification& whole_image, int image_w, int image_h,
                                            const CategoryHierarchy& h, double iou_threshold = 0.3);

}  // namespace itoo
