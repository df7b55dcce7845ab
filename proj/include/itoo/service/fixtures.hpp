#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "itoo/core/types.hpp"
#include "itoo/ingest/image.hpp"
#include "itoo/ingest/loaders.hpp"
#include "itoo/pipeline/plugins.hpp"

namespace itoo {

struct FixtureSpec {
    std::uint64_t seed = 2024;
    std::size_t users = 60;
    std::size_t items_per_sub = 12;
    std::size_t ootds = 160;
    std::size_t views_per_user = 30;
    std::size_t stale_users = 3;  // users whose whole history is older than the staleness horizon
    std::size_t uploads = 50;     // synthetic OOTD images for the pipeline
    Timestamp base_time = parse_iso8601("2024-06-01T12:00:00Z");
    EmbeddingDims dims;
};

/// Style families used to correlate embeddings, hashtags and preferences.
const std::vector<std::pair<std::string, std::vector<std::string>>>& fixture_styles();

struct FixtureData {
    Metadata metadata;  // items carry all three embeddings
    std::vector<InteractionEvent> events;
};

FixtureData make_fixture_data(const FixtureSpec& spec,
                              const CategoryHierarchy& h = CategoryHierarchy::default_hierarchy());

struct SyntheticUpload {
    std::string name;
    RasterImage image;
    std::vector<BoundingBox> boxes;
    std::vector<CropAnnotation> crops;  // parallel to boxes
    UserId uploader;
    std::vector<std::string> hashtags;
};

/// Textured rectangles on a light background; every crop and image has a distinct average
/// hash so stub plugins can look them up. `book` receives the annotations.
std::vector<SyntheticUpload> make_synthetic_uploads(std::size_t n, std::uint64_t seed,
                                                    const std::vector<UserId>& uploaders, AnnotationBook& book,
                                                    const CategoryHierarchy& h = CategoryHierarchy::default_hierarchy());

struct FixtureSummary {
    std::size_t items = 0;
    std::size_t ootds = 0;
    std::size_t users = 0;
    std::size_t events = 0;
    std::size_t uploads = 0;
};

/// Writes a complete data directory:
///   hierarchy.tsv, metadata.jsonl, classifier.vec, tagger.vec, search.vec, interactions.csv,
///   annotations.jsonl, uploads/manifest.jsonl + uploads/*.ppm, dag.txt,
///   metric/labels.csv + metric/init.vec, itoo.conf
/// Throws ContractError if `dir` exists and is not empty.
FixtureSummary write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec);

}  // namespace itoo
