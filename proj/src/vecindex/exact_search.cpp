#include "itoo/vecindex/exact_search.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "itoo/core/errors.hpp"

namespace itoo {

std::vector<float> normalized(std::span<const float> v) {
    double ss = 0.0;
    for (float x : v) {
        if (!std::isfinite(x)) throw ContractError("non-finite vector component");
        ss += static_cast<double>(x) * x;
    }
    if (ss == 0.0) throw ContractError("zero vector cannot be normalized");
    const double inv = 1.0 / std::sqrt(ss);
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
    return out;
}

std::uint32_t FlatVectors::add(ItemId id, std::span<const float> v) {
    const auto unit = normalized(v);
    add_normalized(id, unit);
    return static_cast<std::uint32_t>(ids_.size() - 1);
}

void FlatVectors::add_normalized(ItemId id, std::span<const float> unit) {
    if (unit.size() != dim_) {
        throw SchemaError("vector dimension " + std::to_string(unit.size()) + " != " + std::to_string(dim_));
    }
    ids_.push_back(id);
    data_.insert(data_.end(), unit.begin(), unit.end());
}

std::vector<SearchHit> exact_topk(const FlatVectors& store, std::span<const float> unit_query, std::size_t k) {
    if (unit_query.size() != store.dim()) {
        throw SchemaError("query dimension " + std::to_string(unit_query.size()) + " != index dimension " +
                          std::to_string(store.dim()));
    }
    std::vector<SearchHit> hits;
    hits.reserve(store.size());
    for (std::uint32_t i = 0; i < store.size(); ++i) {
        hits.push_back({store.id(i), dot_f32(unit_query.data(), store.row(i), store.dim())});
    }
    const auto take = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(), ranks_before);
    hits.resize(take);
    return hits;
}

std::vector<std::vector<SearchHit>> exact_topk_batch(const FlatVectors& store,
                                                     const std::vector<std::vector<float>>& queries,
                                                     std::size_t k, Exec exec) {
    std::vector<std::vector<float>> unit;
    unit.reserve(queries.size());
    for (const auto& q : queries) {
        if (q.size() != store.dim()) {
            throw SchemaError("query dimension " + std::to_string(q.size()) + " != index dimension " +
                              std::to_string(store.dim()));
        }
        unit.push_back(normalized(q));
    }

    std::vector<std::vector<SearchHit>> out(queries.size());
    const auto n = static_cast<std::int64_t>(queries.size());
    if (exec == Exec::serial) {
        for (std::int64_t i = 0; i < n; ++i) out[i] = exact_topk(store, unit[i], k);
    } else {
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < n; ++i) out[i] = exact_topk(store, unit[i], k);
    }
    return out;
}

}  // namespace itoo
