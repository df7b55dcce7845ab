#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "itoo/core/parallel.hpp"
#include "itoo/core/types.hpp"

namespace itoo {

struct SearchHit {
    ItemId id = 0;
    float score = 0.0f;  // cosine similarity

    bool operator==(const SearchHit&) const = default;
};

/// Result order used everywhere: score descending, then id ascending.
inline bool ranks_before(const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

/// Inner product kernel shared by the exact and graph searches so both produce
/// bit-identical scores for the same pair of stored vectors.
inline float dot_f32(const float* a, const float* b, std::size_t d) {
    float s = 0.0f;
#pragma omp simd reduction(+ : s)
    for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

/// Unit-normalized copy; throws ContractError for a zero or non-finite vector.
std::vector<float> normalized(std::span<const float> v);

/// Contiguous store of unit vectors with external ids.
class FlatVectors {
public:
    FlatVectors() = default;
    explicit FlatVectors(std::size_t dim) : dim_(dim) {}

    /// Normalizes and appends. Caller guarantees the vector is nonzero and has dim() entries.
    std::uint32_t add(ItemId id, std::span<const float> v);
    void add_normalized(ItemId id, std::span<const float> unit);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    ItemId id(std::uint32_t internal) const { return ids_[internal]; }
    const float* row(std::uint32_t internal) const { return data_.data() + static_cast<std::size_t>(internal) * dim_; }
    std::span<const float> raw() const { return data_; }
    const std::vector<ItemId>& ids() const { return ids_; }
    void reserve(std::size_t n) {
        ids_.reserve(n);
        data_.reserve(n * dim_);
    }

private:
    std::size_t dim_ = 0;
    std::vector<ItemId> ids_;
    std::vector<float> data_;
};

/// Exhaustive top-k over `store` for a unit query.
std::vector<SearchHit> exact_topk(const FlatVectors& store, std::span<const float> unit_query, std::size_t k);

/// Exhaustive top-k for many queries (normalized internally). The parallel path spreads
/// queries over OpenMP threads; the serial path is the reference.
std::vector<std::vector<SearchHit>> exact_topk_batch(const FlatVectors& store,
                                                     const std::vector<std::vector<float>>& queries,
                                                     std::size_t k, Exec exec = Exec::parallel);

}  // namespace itoo
