#include "itoo/vecindex/catalog.hpp"

#include <exception>

#include "itoo/core/errors.hpp"

namespace itoo {

const IndexCatalog::Entry* IndexCatalog::find(const std::string& super) const {
    auto it = entries_.find(super);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<SearchHit> IndexCatalog::search(const std::string& super, std::span<const float> query, std::size_t k,
                                            std::optional<std::size_t> ef) const {
    const auto* e = find(super);
    if (e == nullptr || !e->index) return {};
    return e->index->search(query, k, ef);
}

std::size_t IndexCatalog::total_size() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.index ? e.index->size() : 0;
    return n;
}

IndexCatalog rebuild_catalog(const IndexCatalog& old, const GroupedVectors& grouped, const CatalogConfig& cfg,
                             Timestamp now) {
    std::vector<const std::string*> supers;
    std::vector<const std::map<ItemId, std::vector<float>>*> groups;
    for (const auto& [super, vecs] : grouped) {
        supers.push_back(&super);
        groups.push_back(&vecs);
    }
    std::vector<std::shared_ptr<const ShardedIndex>> built(supers.size());
    std::vector<std::exception_ptr> errors(supers.size());

    const auto n = static_cast<std::int64_t>(supers.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            built[i] = std::make_shared<const ShardedIndex>(
                ShardedIndex::build(*groups[i], cfg.shards, cfg.hnsw, cfg.dim));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }

    std::vector<ItemId> rejected;
    std::string first_error;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const BuildError& e) {
            rejected.insert(rejected.end(), e.rejected_ids().begin(), e.rejected_ids().end());
            if (first_error.empty()) first_error = *supers[i] + ": " + e.what();
        } catch (const std::exception& e) {
            if (first_error.empty()) first_error = *supers[i] + ": " + e.what();
        }
    }
    if (!first_error.empty()) throw BuildError("catalog rebuild failed: " + first_error, std::move(rejected));

    IndexCatalog next = old;
    for (std::size_t i = 0; i < supers.size(); ++i) next.set(*supers[i], {built[i], now});
    next.set_version(old.version() + 1);
    return next;
}

std::shared_ptr<const IndexCatalog> CatalogHandle::current() const {
    std::lock_guard lock(swap_mutex_);
    return current_;
}

void CatalogHandle::replace(std::shared_ptr<const IndexCatalog> next) {
    std::lock_guard lock(swap_mutex_);
    current_ = std::move(next);
}

CatalogHandle::RebuildOutcome CatalogHandle::rebuild(const GroupedVectors& grouped, const CatalogConfig& cfg,
                                                     Timestamp now) {
    std::lock_guard rebuild_lock(rebuild_mutex_);
    const auto base = current();
    RebuildOutcome out;
    try {
        auto next = std::make_shared<const IndexCatalog>(rebuild_catalog(*base, grouped, cfg, now));
        out.version = next->version();
        replace(std::move(next));
        out.ok = true;
    } catch (const BuildError& e) {
        out.error = e.what();
        out.rejected_ids = e.rejected_ids();
        out.version = base->version();
    } catch (const std::exception& e) {
        out.error = e.what();
        out.version = base->version();
    }
    return out;
}

}  // namespace itoo
