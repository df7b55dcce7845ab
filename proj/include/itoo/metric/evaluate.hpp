#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "itoo/core/parallel.hpp"
#include "itoo/metric/sampler.hpp"
#include "itoo/metric/table.hpp"

namespace itoo {

inline const std::vector<std::size_t> kDefaultKs = {1, 5, 10, 20};

struct TopkReport {
    std::vector<std::size_t> ks;
    std::vector<double> accuracy;  // parallel to ks
    std::size_t n_queries = 0;     // queries counted in the denominator
    std::size_t n_excluded = 0;    // queries whose class has no gallery image

    double at(std::size_t k) const;
    /// One JSON object per k: {"k", "accuracy", "n_queries", "n_excluded"}.
    std::string to_json_lines() const;
};

/// Fraction of queries with a same-class gallery image among their k nearest gallery
/// images (cosine, ties by ascending image id). Parallel over queries unless serial.
TopkReport evaluate_topk(const EmbeddingTable& table, const std::vector<ImageId>& queries,
                         const std::vector<ImageId>& gallery, const LabelIndex& labels,
                         const std::vector<std::size_t>& ks = kDefaultKs, Exec exec = Exec::parallel);

/// Leave-one-out: every labeled image queries all other images.
TopkReport evaluate_self_retrieval(const EmbeddingTable& table, const LabelIndex& labels,
                                   const std::vector<std::size_t>& ks = kDefaultKs, Exec exec = Exec::parallel);

/// Same protocol over an external retriever (e.g. a vector index) returning ranked
/// gallery ids for a query; `retrieve(query, kmax)`.
using Retriever = std::function<std::vector<ImageId>(ImageId query, std::size_t kmax)>;
TopkReport evaluate_topk(const Retriever& retrieve, const std::vector<ImageId>& queries,
                         const std::vector<ImageId>& gallery, const LabelIndex& labels,
                         const std::vector<std::size_t>& ks = kDefaultKs);

}  // namespace itoo
