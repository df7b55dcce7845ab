#include "itoo/metric/table.hpp"

#include <cmath>
#include <random>
#include <string>

#include "itoo/core/errors.hpp"
#include "itoo/ingest/loaders.hpp"

namespace itoo {

EmbeddingTable EmbeddingTable::random(const std::vector<ImageId>& ids, std::size_t dim, std::uint64_t seed) {
    EmbeddingTable t(dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> row(dim);
    for (ImageId id : ids) {
        double norm = 0.0;
        for (auto& x : row) {
            x = gauss(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : row) x /= norm;
        t.add(id, row);
    }
    return t;
}

void EmbeddingTable::add(ImageId id, std::span<const double> row) {
    if (row.size() != dim_) {
        throw SchemaError("embedding table row dimension " + std::to_string(row.size()) + " != " +
                          std::to_string(dim_));
    }
    for (double x : row) {
        if (!std::isfinite(x)) throw ContractError("embedding table row for image " + std::to_string(id) + " is not finite");
    }
    if (!index_.emplace(id, ids_.size()).second) {
        throw ContractError("duplicate image id " + std::to_string(id));
    }
    ids_.push_back(id);
    data_.insert(data_.end(), row.begin(), row.end());
}

std::span<const double> EmbeddingTable::row(ImageId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ContractError("image " + std::to_string(id) + " not in embedding table");
    return {data_.data() + it->second * dim_, dim_};
}

std::span<double> EmbeddingTable::row_mut(ImageId id) {
    auto it = index_.find(id);
    if (it == index_.end()) throw ContractError("image " + std::to_string(id) + " not in embedding table");
    return {data_.data() + it->second * dim_, dim_};
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
    EmbeddingFile f;
    f.dim = static_cast<std::uint32_t>(dim_);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        f.vectors[ids_[i]] = std::vector<float>(data_.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                                                data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
    }
    save_embeddings(path, f);
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    const auto f = load_embeddings(path);
    EmbeddingTable t(f.dim);
    std::vector<double> row(f.dim);
    for (const auto& [id, v] : f.vectors) {
        std::copy(v.begin(), v.end(), row.begin());
        t.add(id, row);
    }
    return t;
}

}  // namespace itoo
