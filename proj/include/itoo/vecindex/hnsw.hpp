#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "itoo/vecindex/exact_search.hpp"

namespace itoo {

struct HnswParams {
    std::size_t M = 16;
    std::size_t ef_construction = 200;
    std::size_t ef_search = 64;
    std::uint64_t seed = 42;
};

/// Passing this as ef_search requests an exhaustive scan.
inline constexpr std::size_t kExhaustive = std::numeric_limits<std::size_t>::max();

/// Hierarchical navigable small-world graph over unit vectors, cosine similarity.
///
/// Built once, then immutable: search() is safe from any number of threads. Insertion
/// happens in ascending id order with levels drawn from a seeded generator, so equal
/// inputs and params always give the same graph.
class HnswIndex {
public:
    HnswIndex() = default;

    /// Throws BuildError listing zero/non-finite vectors, SchemaError on mixed dimensions
    /// or when `expected_dim` is nonzero and differs.
    static HnswIndex build(const std::map<ItemId, std::vector<float>>& vectors, const HnswParams& params,
                           std::size_t expected_dim = 0);

    /// Up to k hits ordered by score desc, id asc. `ef` defaults to params().ef_search;
    /// ef >= size() scans exhaustively. Throws SchemaError on dimension mismatch.
    std::vector<SearchHit> search(std::span<const float> query, std::size_t k,
                                  std::optional<std::size_t> ef = std::nullopt) const;

    std::vector<std::vector<SearchHit>> search_batch(const std::vector<std::vector<float>>& queries,
                                                     std::size_t k, std::optional<std::size_t> ef = std::nullopt,
                                                     Exec exec = Exec::parallel) const;

    std::size_t size() const { return store_.size(); }
    std::size_t dim() const { return store_.dim(); }
    bool empty() const { return size() == 0; }
    const HnswParams& params() const { return params_; }
    int max_level() const { return max_level_; }
    bool contains(ItemId id) const { return id_to_internal_.count(id) != 0; }
    const FlatVectors& vectors() const { return store_; }
    std::optional<ItemId> entry_point() const;

    /// Exactly size() * dim() * sizeof(float).
    std::size_t vector_bytes() const { return store_.raw().size() * sizeof(float); }
    std::size_t edge_count() const;
    int level_of(ItemId id) const;
    std::vector<ItemId> neighbors(ItemId id, int level) const;

    /// Checks layer containment, degree bounds, unit norms and entry point placement.
    /// Empty result means the graph is well-formed.
    std::vector<std::string> validate() const;

    /// Versioned snapshot: magic `ITOOHNSW`, params, vectors, adjacency.
    void save(const std::filesystem::path& path) const;
    /// Throws ParseError/SchemaError on malformed or invariant-violating snapshots.
    static HnswIndex load(const std::filesystem::path& path);

private:
    using Internal = std::uint32_t;
    struct Candidate {
        float dist;
        Internal node;
    };

    std::size_t max_degree(int level) const { return level == 0 ? 2 * params_.M : params_.M; }
    std::span<const Internal> links(Internal node, int level) const;
    void set_links(Internal node, int level, std::span<const Internal> adj);
    void add_link(Internal node, int level, Internal target);
    float distance(const float* q, Internal node) const { return 1.0f - dot_f32(q, store_.row(node), store_.dim()); }

    void insert(Internal node, int level, std::vector<std::uint32_t>& visited, std::uint32_t& epoch);
    std::vector<Candidate> search_layer(const float* q, std::vector<Candidate> entry, std::size_t ef, int level,
                                        std::vector<std::uint32_t>& visited, std::uint32_t& epoch) const;
    Internal greedy_descend(const float* q, Internal start, int from_level, int to_level) const;
    std::vector<Internal> select_neighbors(std::vector<Candidate> candidates, std::size_t m) const;
    void finish_load();

    HnswParams params_;
    FlatVectors store_;
    std::vector<int> levels_;
    // layer 0: fixed slots of (count, 2M targets) per node; upper_[node][level - 1] above
    std::vector<Internal> level0_;
    std::vector<std::vector<std::vector<Internal>>> upper_;
    std::unordered_map<ItemId, Internal> id_to_internal_;
    Internal entry_ = 0;
    int max_level_ = -1;
};

}  // namespace itoo
