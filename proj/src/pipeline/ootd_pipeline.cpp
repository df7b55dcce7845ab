#include "itoo/pipeline/ootd_pipeline.hpp"

#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

#include "itoo/core/errors.hpp"

namespace itoo {

void StagingArea::stage(const StagedInsertion& s) {
    auto& p = partition(s.super_category);
    std::lock_guard lock(p.mu);
    p.vectors[s.item_id] = s.vector;
}

StagingArea::Partition& StagingArea::partition(const std::string& super) {
    std::lock_guard lock(map_mu_);
    auto& slot = parts_[super];
    if (!slot) slot = std::make_unique<Partition>();
    return *slot;
}

std::size_t StagingArea::size() const {
    std::lock_guard lock(map_mu_);
    std::size_t n = 0;
    for (const auto& [_, p] : parts_) {
        std::lock_guard plock(p->mu);
        n += p->vectors.size();
    }
    return n;
}

GroupedVectors StagingArea::snapshot() const {
    std::lock_guard lock(map_mu_);
    GroupedVectors g;
    for (const auto& [super, p] : parts_) {
        std::lock_guard plock(p->mu);
        g[super] = p->vectors;
    }
    return g;
}

GroupedVectors StagingArea::merged_with(const GroupedVectors& base) const {
    GroupedVectors g = base;
    for (auto& [super, vecs] : snapshot()) {
        for (auto& [id, v] : vecs) g[super][id] = std::move(v);
    }
    return g;
}

namespace {

// Runs fn(0..n-1) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
    const std::size_t t = std::min(std::max<std::size_t>(workers, 1), n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

std::string describe(std::exception_ptr e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& ex) {
        return ex.what();
    } catch (...) {
        return "unknown error";
    }
}

}  // namespace

PipelineResult run_ootd_pipeline(const RasterImage& image, const ModelPlugins& plugins, const CategoryHierarchy& h,
                                 const PipelineOptions& opts, StagingArea* staging) {
    if (const auto miss = plugins.missing(); !miss.empty()) {
        std::string names;
        for (const auto& m : miss) names += (names.empty() ? "" : ", ") + m;
        throw ContractError("missing plugins: " + names);
    }
    PipelineResult res;

    std::vector<BoundingBox> boxes;
    try {
        boxes = plugins.detector(image);
    } catch (...) {
        res.errors.push_back({-1, "detector", describe(std::current_exception())});
    }

    const std::size_t n = boxes.size();
    std::vector<std::optional<RasterImage>> crops(n);
    std::vector<std::optional<Classification>> cls(n);
    std::vector<std::optional<TagOutput>> tags(n);
    std::vector<std::optional<CropError>> errs(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            boxes[i] = clip_box(boxes[i], image.width(), image.height());
            crops[i] = image.crop(boxes[i].x, boxes[i].y, boxes[i].w, boxes[i].h);
        } catch (...) {
            errs[2 * i] = CropError{static_cast<int>(i), "crop", describe(std::current_exception())};
        }
    }
    parallel_for(2 * n, opts.workers, [&](std::size_t job) {
        const std::size_t i = job / 2;
        if (!crops[i]) return;
        try {
            if (job % 2 == 0) {
                auto c = plugins.classifier(*crops[i]);
                if (!h.has_sub(c.sub_category)) {
                    throw ContractError("unknown sub-category '" + c.sub_category + "'");
                }
                cls[i] = std::move(c);
            } else {
                tags[i] = plugins.tagger(*crops[i]);
            }
        } catch (...) {
            errs[job] = CropError{static_cast<int>(i), job % 2 == 0 ? "classifier" : "tagger",
                                  describe(std::current_exception())};
        }
    });
    for (auto& e : errs) {
        if (e) res.errors.push_back(std::move(*e));
    }

    std::vector<BoundingBox> valid_boxes;
    std::vector<std::string> labels;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < n; ++i) {
        if (!cls[i]) continue;
        valid_boxes.push_back(boxes[i]);
        labels.push_back(cls[i]->sub_category);
        origin.push_back(i);
    }
    std::vector<RasterImage> kept_crops;
    for (std::size_t k : surviving_detections(valid_boxes, labels, h, opts.iou_threshold)) {
        const std::size_t i = origin[k];
        res.crops.push_back({boxes[i], *cls[i], tags[i].value_or(TagOutput{}), {}, false});
        kept_crops.push_back(*crops[i]);
    }
    if (res.crops.empty()) {
        Classification whole;
        try {
            whole = plugins.classifier(image);
            h.require_super(whole.sub_category);
        } catch (...) {
            throw std::runtime_error("whole-image classification failed: " + describe(std::current_exception()));
        }
        TagOutput t;
        try {
            t = plugins.tagger(image);
        } catch (...) {
            res.errors.push_back({-1, "tagger", describe(std::current_exception())});
        }
        BoundingBox box{0, 0, image.width(), image.height(), h.require_super(whole.sub_category), whole.confidence};
        res.crops.push_back({box, std::move(whole), std::move(t), {}, true});
        kept_crops.push_back(image);
    }

    std::vector<std::optional<CropError>> embed_errs(res.crops.size());
    parallel_for(res.crops.size(), opts.workers, [&](std::size_t i) {
        try {
            auto v = plugins.embedder(kept_crops[i]);
            if (v.size() != plugins.embed_dim) {
                throw SchemaError("embedding dimension " + std::to_string(v.size()) + " != " +
                                  std::to_string(plugins.embed_dim));
            }
            for (float x : v) {
                if (!std::isfinite(x)) throw SchemaError("non-finite embedding component");
            }
            res.crops[i].embedding = std::move(v);
        } catch (...) {
            embed_errs[i] = CropError{static_cast<int>(i), "embedder", describe(std::current_exception())};
        }
    });
    for (auto& e : embed_errs) {
        if (e) res.errors.push_back(std::move(*e));
    }

    for (std::size_t i = 0; i < res.crops.size(); ++i) {
        const auto& c = res.crops[i];
        if (c.embedding.empty()) continue;
        res.staged.push_back({c.box.super_category, opts.first_item_id + i, c.embedding});
    }
    if (staging) {
        for (const auto& s : res.staged) staging->stage(s);
    }
    return res;
}

}  // namespace itoo
