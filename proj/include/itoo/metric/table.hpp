#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "itoo/ingest/labels.hpp"

namespace itoo {

/// Trainable image_id -> vector table standing in for a CNN embedder. Rows are stored
/// unnormalized; losses normalize internally.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    /// Rows drawn uniformly from the unit sphere.
    static EmbeddingTable random(const std::vector<ImageId>& ids, std::size_t dim, std::uint64_t seed);

    void add(ImageId id, std::span<const double> row);
    bool contains(ImageId id) const { return index_.count(id) != 0; }
    std::span<const double> row(ImageId id) const;
    std::span<double> row_mut(ImageId id);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<ImageId>& ids() const { return ids_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const EmbeddingTable& o) const { return dim_ == o.dim_ && ids_ == o.ids_ && data_ == o.data_; }

    /// Stored as an ITOOVEC1 vector file (f32 components).
    void save(const std::filesystem::path& path) const;
    static EmbeddingTable load(const std::filesystem::path& path);

private:
    std::size_t dim_ = 0;
    std::vector<ImageId> ids_;
    std::unordered_map<ImageId, std::size_t> index_;
    std::vector<double> data_;
};

}  // namespace itoo
