#include "itoo/pipeline/detections.hpp"

#include <algorithm>
#include <numeric>

#include "itoo/core/errors.hpp"

namespace itoo {

double iou(const BoundingBox& a, const BoundingBox& b) {
    if (a.w <= 0 || a.h <= 0 || b.w <= 0 || b.h <= 0) return 0.0;
    const long ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const long iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = static_cast<double>(ix * iy);
    const double uni = static_cast<double>(long(a.w) * a.h + long(b.w) * b.h) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

BoundingBox clip_box(const BoundingBox& b, int image_w, int image_h) {
    BoundingBox c = b;
    c.x = std::clamp(b.x, 0, image_w);
    c.y = std::clamp(b.y, 0, image_h);
    c.w = std::min(b.x + b.w, image_w) - c.x;
    c.h = std::min(b.y + b.h, image_h) - c.y;
    if (c.w <= 0 || c.h <= 0) throw ContractError("bounding box lies outside the image");
    return c;
}

std::vector<std::size_t> surviving_detections(const std::vector<BoundingBox>& boxes,
                                              const std::vector<std::string>& labels, const CategoryHierarchy& h,
                                              double iou_threshold) {
    if (boxes.size() != labels.size()) throw ContractError("one classifier label per box required");
    std::vector<bool> alive(boxes.size(), false);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        alive[i] = h.require_super(labels[i]) == boxes[i].super_category;
    }

    std::vector<std::size_t> dresses;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (alive[i] && boxes[i].super_category == "dress") dresses.push_back(i);
    }
    std::stable_sort(dresses.begin(), dresses.end(),
                     [&](std::size_t a, std::size_t b) { return boxes[a].confidence > boxes[b].confidence; });
    for (std::size_t d : dresses) {
        if (!alive[d]) continue;
        std::vector<std::size_t> rivals;
        double best = -1.0;
        for (std::size_t j = 0; j < boxes.size(); ++j) {
            const auto& s = boxes[j].super_category;
            if (!alive[j] || (s != "top" && s != "bottom")) continue;
            if (iou(boxes[d], boxes[j]) > iou_threshold) {
                rivals.push_back(j);
                best = std::max(best, boxes[j].confidence);
            }
        }
        if (rivals.empty()) continue;
        if (boxes[d].confidence >= best) {
            for (std::size_t j : rivals) alive[j] = false;
        } else {
            alive[d] = false;
        }
    }

    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (alive[i]) out.push_back(i);
    }
    return out;
}

std::vector<KeptBox> postprocess_detections(const std::vector<BoundingBox>& boxes,
                                            const std::vector<std::string>& labels,
                                            const Classification& whole_image, int image_w, int image_h,
                                            const CategoryHierarchy& h, double iou_threshold) {
    std::vector<KeptBox> out;
    for (std::size_t i : surviving_detections(boxes, labels, h, iou_threshold)) {
        out.push_back({boxes[i], labels[i], static_cast<int>(i)});
    }
    if (out.empty()) {
        BoundingBox whole{0, 0, image_w, image_h, h.require_super(whole_image.sub_category), whole_image.confidence};
        out.push_back({whole, whole_image.sub_category, -1});
    }
    return out;
}

}  // namespace itoo
