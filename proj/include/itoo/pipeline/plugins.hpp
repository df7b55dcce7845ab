#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "itoo/core/hierarchy.hpp"
#include "itoo/core/types.hpp"
#include "itoo/ingest/image.hpp"
#include "itoo/pipeline/detections.hpp"

namespace itoo {

enum class PluginKind { detector, classifier, tagger, embedder };

struct TagOutput {
    std::string color;
    std::set<AttributeTag> attributes;
    std::vector<float> representation;  // f_A; may be empty
};

using DetectorFn = std::function<std::vector<BoundingBox>(const RasterImage&)>;
using ClassifierFn = std::function<Classification(const RasterImage&)>;
using TaggerFn = std::function<TagOutput(const RasterImage&)>;
using EmbedderFn = std::function<std::vector<float>(const RasterImage&)>;

struct ModelPlugins {
    DetectorFn detector;
    ClassifierFn classifier;
    TaggerFn tagger;
    EmbedderFn embedder;
    std::size_t embed_dim = 128;
    EmbeddingDims dims;  // representation sizes the stubs emit

    /// Names of missing plugin kinds.
    std::vector<std::string> missing() const;
};

struct CropAnnotation {
    std::string sub_category;
    std::string color;
    std::set<AttributeTag> attributes;
};

/// Ground truth the stub models look up by average hash.
struct AnnotationBook {
    std::map<std::uint64_t, std::vector<BoundingBox>> boxes;  // keyed by whole-image hash
    std::map<std::uint64_t, CropAnnotation> crops;            // keyed by crop hash
};

/// Deterministic stand-ins for the detector/classifier/tagger/embedder:
///  - detector: annotated boxes, else none (the pipeline falls back to the whole image);
///  - classifier/tagger: annotation lookup, else a hash-derived sub-category and the nearest
///    palette color of the mean pixel;
///  - embedder: fixed random projection (from `seed`) of an 8x8 RGB area-average grid,
///    normalized to unit length. Classifier and tagger representations are further
///    projections of the same features.
ModelPlugins stub_plugins(std::uint64_t seed, AnnotationBook book,
                          const CategoryHierarchy& h = CategoryHierarchy::default_hierarchy(),
                          const EmbeddingDims& dims = {});

/// JSON-lines: {"type":"image","hash":"<16 hex>","boxes":[...]} and
/// {"type":"crop","hash":"<16 hex>","sub_category","color","attributes":[[group,value],...]}.
AnnotationBook load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path, const AnnotationBook& book);

std::string hash_hex(std::uint64_t bits);

/// Name of the palette color closest to (r, g, b).
std::string nearest_color_name(double r, double g, double b);

}  // namespace itoo
