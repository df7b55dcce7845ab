#include "itoo/vecindex/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "itoo/core/errors.hpp"

namespace itoo {

namespace {

// Per-thread traversal scratch shared by all indexes; a fresh epoch per traversal keeps
// visited marks from earlier traversals (of any index) from leaking.
struct TraversalScratch {
    std::vector<std::uint32_t> marks;
    std::uint32_t epoch = 0;
};

thread_local TraversalScratch tl_scratch;

template <typename C>
bool farther(const C& a, const C& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.node < b.node);
}

template <typename C>
bool closer(const C& a, const C& b) {
    return a.dist > b.dist || (a.dist == b.dist && a.node > b.node);
}

}  // namespace

HnswIndex HnswIndex::build(const std::map<ItemId, std::vector<float>>& vectors, const HnswParams& params,
                           std::size_t expected_dim) {
    if (params.M < 2) throw ContractError("HNSW M must be at least 2");
    HnswIndex idx;
    idx.params_ = params;
    idx.params_.ef_construction = std::max(params.ef_construction, params.M);

    std::size_t dim = expected_dim;
    if (dim == 0 && !vectors.empty()) dim = vectors.begin()->second.size();
    std::vector<ItemId> rejected;
    for (const auto& [id, v] : vectors) {
        if (v.size() != dim) {
            throw SchemaError("item " + std::to_string(id) + " has dimension " + std::to_string(v.size()) +
                              ", expected " + std::to_string(dim));
        }
        double ss = 0.0;
        bool finite = true;
        for (float x : v) {
            finite = finite && std::isfinite(x);
            ss += static_cast<double>(x) * x;
        }
        if (!finite || ss == 0.0) rejected.push_back(id);
    }
    if (!rejected.empty()) {
        throw BuildError("HNSW build rejected " + std::to_string(rejected.size()) + " zero or non-finite vectors",
                         std::move(rejected));
    }

    idx.store_ = FlatVectors(dim);
    idx.store_.reserve(vectors.size());
    for (const auto& [id, v] : vectors) {
        idx.id_to_internal_.emplace(id, idx.store_.add(id, v));
    }

    const std::size_t n = idx.store_.size();
    std::mt19937_64 rng(params.seed);
    const double mult = 1.0 / std::log(static_cast<double>(params.M));
    idx.levels_.resize(n);
    idx.upper_.resize(n);
    idx.level0_.assign(n * (2 * params.M + 1), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        const int level = static_cast<int>(std::floor(-std::log(1.0 - u) * mult));
        idx.levels_[i] = level;
        idx.upper_[i].resize(static_cast<std::size_t>(level));
    }

    std::vector<std::uint32_t> visited(n, 0);
    std::uint32_t epoch = 0;
    for (std::size_t i = 0; i < n; ++i) {
        idx.insert(static_cast<Internal>(i), idx.levels_[i], visited, epoch);
    }
    return idx;
}

std::span<const HnswIndex::Internal> HnswIndex::links(Internal node, int level) const {
    if (level == 0) {
        const Internal* slot = level0_.data() + static_cast<std::size_t>(node) * (2 * params_.M + 1);
        return {slot + 1, slot[0]};
    }
    return upper_[node][static_cast<std::size_t>(level) - 1];
}

void HnswIndex::set_links(Internal node, int level, std::span<const Internal> adj) {
    if (level == 0) {
        Internal* slot = level0_.data() + static_cast<std::size_t>(node) * (2 * params_.M + 1);
        slot[0] = static_cast<Internal>(adj.size());
        std::copy(adj.begin(), adj.end(), slot + 1);
        return;
    }
    upper_[node][static_cast<std::size_t>(level) - 1].assign(adj.begin(), adj.end());
}

void HnswIndex::add_link(Internal node, int level, Internal target) {
    if (level == 0) {
        Internal* slot = level0_.data() + static_cast<std::size_t>(node) * (2 * params_.M + 1);
        slot[1 + slot[0]] = target;
        ++slot[0];
        return;
    }
    upper_[node][static_cast<std::size_t>(level) - 1].push_back(target);
}

HnswIndex::Internal HnswIndex::greedy_descend(const float* q, Internal start, int from_level, int to_level) const {
    Internal cur = start;
    float cur_dist = distance(q, cur);
    for (int l = from_level; l >= to_level; --l) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (Internal nb : links(cur, l)) {
                const float d = distance(q, nb);
                if (d < cur_dist || (d == cur_dist && nb < cur)) {
                    cur = nb;
                    cur_dist = d;
                    changed = true;
                }
            }
        }
    }
    return cur;
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer(const float* q, std::vector<Candidate> entry,
                                                          std::size_t ef, int level,
                                                          std::vector<std::uint32_t>& visited,
                                                          std::uint32_t& epoch) const {
    if (++epoch == 0) {
        std::fill(visited.begin(), visited.end(), 0);
        epoch = 1;
    }
    // frontier: min-heap on distance; best: max-heap on distance, capped at ef
    std::vector<Candidate> frontier;
    std::vector<Candidate> best;
    frontier.reserve(ef * 2);
    best.reserve(ef + 1);
    for (const auto& c : entry) {
        if (visited[c.node] == epoch) continue;
        visited[c.node] = epoch;
        frontier.push_back(c);
        std::push_heap(frontier.begin(), frontier.end(), closer<Candidate>);
        best.push_back(c);
        std::push_heap(best.begin(), best.end(), farther<Candidate>);
        if (best.size() > ef) {
            std::pop_heap(best.begin(), best.end(), farther<Candidate>);
            best.pop_back();
        }
    }

    const std::size_t d = store_.dim();
    while (!frontier.empty()) {
        const Candidate c = frontier.front();
        if (best.size() >= ef && c.dist > best.front().dist) break;
        std::pop_heap(frontier.begin(), frontier.end(), closer<Candidate>);
        frontier.pop_back();
        const auto adj = links(c.node, level);
        for (Internal nb : adj) __builtin_prefetch(store_.row(nb));
        for (Internal nb : adj) {
            if (visited[nb] == epoch) continue;
            visited[nb] = epoch;
            const float dist = 1.0f - dot_f32(q, store_.row(nb), d);
            if (best.size() < ef || dist < best.front().dist) {
                frontier.push_back({dist, nb});
                std::push_heap(frontier.begin(), frontier.end(), closer<Candidate>);
                best.push_back({dist, nb});
                std::push_heap(best.begin(), best.end(), farther<Candidate>);
                if (best.size() > ef) {
                    std::pop_heap(best.begin(), best.end(), farther<Candidate>);
                    best.pop_back();
                }
            }
        }
    }
    std::sort_heap(best.begin(), best.end(), farther<Candidate>);
    return best;
}

std::vector<HnswIndex::Internal> HnswIndex::select_neighbors(std::vector<Candidate> candidates,
                                                             std::size_t m) const {
    std::sort(candidates.begin(), candidates.end(), farther<Candidate>);
    std::vector<Internal> out;
    if (candidates.size() <= m) {
        for (const auto& c : candidates) out.push_back(c.node);
        return out;
    }
    // keep a candidate only if it is closer to the base than to every neighbor kept so far
    for (const auto& c : candidates) {
        if (out.size() >= m) break;
        bool diverse = true;
        for (Internal r : out) {
            const float d = 1.0f - dot_f32(store_.row(c.node), store_.row(r), store_.dim());
            if (d < c.dist) {
                diverse = false;
                break;
            }
        }
        if (diverse) out.push_back(c.node);
    }
    return out;
}

void HnswIndex::insert(Internal node, int level, std::vector<std::uint32_t>& visited, std::uint32_t& epoch) {
    if (max_level_ < 0) {
        entry_ = node;
        max_level_ = level;
        return;
    }
    const float* q = store_.row(node);
    Internal cur = entry_;
    if (level < max_level_) cur = greedy_descend(q, cur, max_level_, level + 1);

    std::vector<Candidate> entry = {{distance(q, cur), cur}};
    std::vector<Candidate> cands;
    for (int l = std::min(level, max_level_); l >= 0; --l) {
        auto found = search_layer(q, entry, params_.ef_construction, l, visited, epoch);
        const auto chosen = select_neighbors(found, params_.M);
        set_links(node, l, chosen);
        for (Internal e : chosen) {
            const auto adj = links(e, l);
            if (adj.size() < max_degree(l)) {
                add_link(e, l, node);
                continue;
            }
            const float* base = store_.row(e);
            cands.clear();
            for (Internal x : adj) cands.push_back({1.0f - dot_f32(base, store_.row(x), store_.dim()), x});
            cands.push_back({1.0f - dot_f32(base, q, store_.dim()), node});
            set_links(e, l, select_neighbors(cands, max_degree(l)));
        }
        entry = std::move(found);
    }
    if (level > max_level_) {
        entry_ = node;
        max_level_ = level;
    }
}

std::vector<SearchHit> HnswIndex::search(std::span<const float> query, std::size_t k,
                                         std::optional<std::size_t> ef) const {
    if (empty()) return {};
    if (query.size() != dim()) {
        throw SchemaError("query dimension " + std::to_string(query.size()) + " != index dimension " +
                          std::to_string(dim()));
    }
    if (k == 0) throw ContractError("search: k must be at least 1");
    const auto unit = normalized(query);
    const std::size_t beam = std::max(ef.value_or(params_.ef_search), k);
    if (beam >= size()) return exact_topk(store_, unit, k);

    auto& scratch = tl_scratch;
    if (scratch.marks.size() < size()) {
        scratch.marks.assign(size(), 0);
        scratch.epoch = 0;
    }
    const Internal start = greedy_descend(unit.data(), entry_, max_level_, 1);
    auto found = search_layer(unit.data(), {{distance(unit.data(), start), start}}, beam, 0, scratch.marks,
                              scratch.epoch);

    std::vector<SearchHit> hits;
    hits.reserve(found.size());
    for (const auto& c : found) {
        hits.push_back({store_.id(c.node), dot_f32(unit.data(), store_.row(c.node), dim())});
    }
    std::sort(hits.begin(), hits.end(), ranks_before);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<std::vector<SearchHit>> HnswIndex::search_batch(const std::vector<std::vector<float>>& queries,
                                                            std::size_t k, std::optional<std::size_t> ef,
                                                            Exec exec) const {
    if (k == 0) throw ContractError("search: k must be at least 1");
    for (const auto& q : queries) {
        if (!empty() && q.size() != dim()) {
            throw SchemaError("query dimension " + std::to_string(q.size()) + " != index dimension " +
                              std::to_string(dim()));
        }
        if (!empty()) normalized(q);  // reject zero queries before entering the parallel region
    }
    std::vector<std::vector<SearchHit>> out(queries.size());
    const auto n = static_cast<std::int64_t>(queries.size());
    if (exec == Exec::serial) {
        for (std::int64_t i = 0; i < n; ++i) out[i] = search(queries[i], k, ef);
    } else {
#pragma omp parallel for schedule(dynamic, 8)
        for (std::int64_t i = 0; i < n; ++i) out[i] = search(queries[i], k, ef);
    }
    return out;
}

std::optional<ItemId> HnswIndex::entry_point() const {
    if (empty()) return std::nullopt;
    return store_.id(entry_);
}

std::size_t HnswIndex::edge_count() const {
    std::size_t e = 0;
    for (Internal i = 0; i < size(); ++i) {
        for (int l = 0; l <= levels_[i]; ++l) e += links(i, l).size();
    }
    return e;
}

int HnswIndex::level_of(ItemId id) const {
    auto it = id_to_internal_.find(id);
    if (it == id_to_internal_.end()) throw ContractError("unknown item id " + std::to_string(id));
    return levels_[it->second];
}

std::vector<ItemId> HnswIndex::neighbors(ItemId id, int level) const {
    auto it = id_to_internal_.find(id);
    if (it == id_to_internal_.end()) throw ContractError("unknown item id " + std::to_string(id));
    std::vector<ItemId> out;
    if (level < 0 || level > levels_[it->second]) return out;
    for (Internal nb : links(it->second, level)) out.push_back(store_.id(nb));
    return out;
}

std::vector<std::string> HnswIndex::validate() const {
    std::vector<std::string> v;
    const std::size_t n = size();
    if (levels_.size() != n || upper_.size() != n || level0_.size() != n * (2 * params_.M + 1)) {
        v.push_back("level/link tables do not match vector count");
        return v;
    }
    if (n == 0) {
        if (max_level_ != -1) v.push_back("empty index with a nonempty top layer");
        return v;
    }
    if (entry_ >= n) {
        v.push_back("entry point out of range");
        return v;
    }
    if (levels_[entry_] != max_level_) v.push_back("entry point is not on the top layer");
    for (Internal i = 0; i < n; ++i) {
        if (levels_[i] < 0 || levels_[i] > max_level_) {
            v.push_back("node level out of range at " + std::to_string(i));
            continue;
        }
        if (upper_[i].size() != static_cast<std::size_t>(levels_[i])) {
            v.push_back("node " + std::to_string(i) + " has adjacency for the wrong number of layers");
            continue;
        }
        for (int l = 0; l <= levels_[i]; ++l) {
            const auto adj = links(i, l);
            if (adj.size() > max_degree(l)) {
                v.push_back("degree bound exceeded at node " + std::to_string(i) + " layer " + std::to_string(l));
                continue;
            }
            std::vector<Internal> sorted(adj.begin(), adj.end());
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
                v.push_back("duplicate edge at node " + std::to_string(i));
            }
            for (Internal nb : adj) {
                if (nb >= n || nb == i) {
                    v.push_back("invalid edge target at node " + std::to_string(i));
                } else if (levels_[nb] < l) {
                    v.push_back("layer containment violated: edge to node absent from layer " + std::to_string(l));
                }
            }
        }
        double ss = 0.0;
        for (std::size_t k = 0; k < dim(); ++k) ss += static_cast<double>(store_.row(i)[k]) * store_.row(i)[k];
        if (std::abs(std::sqrt(ss) - 1.0) > 1e-6) v.push_back("vector not unit-norm at node " + std::to_string(i));
    }
    return v;
}

void HnswIndex::finish_load() {
    id_to_internal_.clear();
    for (Internal i = 0; i < store_.size(); ++i) {
        if (!id_to_internal_.emplace(store_.id(i), i).second) {
            throw SchemaError("snapshot contains duplicate id " + std::to_string(store_.id(i)));
        }
    }
}

}  // namespace itoo
