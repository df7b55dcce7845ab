#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "itoo/core/hierarchy.hpp"
#include "itoo/ingest/image.hpp"
#include "itoo/pipeline/plugins.hpp"
#include "itoo/vecindex/catalog.hpp"

namespace itoo {

struct AnalyzedCrop {
    BoundingBox box;
    Classification classification;
    TagOutput tags;
    std::vector<float> embedding;  // empty when the embedder failed
    bool fallback = false;
};

struct CropError {
    int crop_index = -1;  // detector box index (index into crops for the embedder); -1 for whole image
    std::string stage;
    std::string message;
};

struct StagedInsertion {
    std::string super_category;
    ItemId item_id = 0;
    std::vector<float> vector;
};

struct PipelineResult {
    std::vector<AnalyzedCrop> crops;
    std::vector<CropError> errors;
    std::vector<StagedInsertion> staged;
};

struct PipelineOptions {
    std::size_t workers = 4;
    double iou_threshold = 0.3;
    ItemId first_item_id = 0;  // staged ids are first_item_id, first_item_id + 1, ...
};

/// Vectors waiting for the next catalog rebuild, one lock per super-category partition.
class StagingArea {
public:
    void stage(const StagedInsertion& s);
    std::size_t size() const;
    /// Merges staged vectors into `base` (staged wins on id clashes).
    GroupedVectors merged_with(const GroupedVectors& base) const;
    GroupedVectors snapshot() const;

private:
    struct Partition {
        mutable std::mutex mu;
        std::map<ItemId, std::vector<float>> vectors;
    };
    Partition& partition(const std::string& super);

    mutable std::mutex map_mu_;
    std::map<std::string, std::unique_ptr<Partition>> parts_;
};

/// detect -> crop -> (classify | tag) per crop in parallel -> postprocess -> embed -> stage.
/// A failing plugin call is recorded in `errors` and only that crop is affected. Throws
/// ContractError when a plugin kind is missing and std::runtime_error when the whole-image
/// classification needed for the fallback box fails.
PipelineResult run_ootd_pipeline(const RasterImage& image, const ModelPlugins& plugins, const CategoryHierarchy& h,
                                 const PipelineOptions& opts = {}, StagingArea* staging = nullptr);

}  // namespace itoo
