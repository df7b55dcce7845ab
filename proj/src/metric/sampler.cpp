#include "itoo/metric/sampler.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "itoo/core/errors.hpp"

namespace itoo {

LabelIndex::LabelIndex(const std::vector<LabeledImage>& labels) {
    for (const auto& l : labels) {
        if (!class_of_.emplace(l.image_id, l.class_id).second) {
            throw ContractError("image " + std::to_string(l.image_id) + " labeled twice");
        }
        members_[l.class_id].push_back(l.image_id);
        source_.try_emplace(l.class_id, l.source);
    }
    for (auto& [c, imgs] : members_) {
        std::sort(imgs.begin(), imgs.end());
        if (imgs.size() >= 2) eligible_.push_back(c);
    }
}

ClassId LabelIndex::class_of(ImageId id) const {
    auto it = class_of_.find(id);
    if (it == class_of_.end()) throw ContractError("image " + std::to_string(id) + " has no label");
    return it->second;
}

std::vector<ImageId> LabelIndex::images() const {
    std::vector<ImageId> out;
    out.reserve(class_of_.size());
    for (const auto& [id, _] : class_of_) out.push_back(id);
    return out;
}

NPairBatch sample_npair_batch(const LabelIndex& labels, std::size_t n, double temperature, std::mt19937_64& rng,
                              const SamplingWeights& weights) {
    if (n < 2) throw ContractError("N-pair batch needs N >= 2");
    if (temperature <= 0.0) throw ContractError("temperature must be positive");
    const auto& eligible = labels.eligible_classes();
    if (eligible.size() < n) {
        throw std::runtime_error("cannot sample " + std::to_string(n) + " pairs: only " +
                                 std::to_string(eligible.size()) + " classes have two or more images");
    }

    std::vector<double> cumulative;
    cumulative.reserve(eligible.size());
    double total = 0.0;
    for (ClassId c : eligible) {
        auto it = weights.find(labels.source_of(c));
        const double w = it == weights.end() ? 1.0 : it->second;
        if (w < 0.0) throw ContractError("sampling weights must be non-negative");
        total += w;
        cumulative.push_back(total);
    }
    std::size_t positive = 0;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        if (cumulative[i] > (i ? cumulative[i - 1] : 0.0)) ++positive;
    }
    if (positive < n) throw std::runtime_error("fewer than N classes carry positive sampling weight");

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::set<ClassId> chosen;
    NPairBatch batch;
    batch.temperature = temperature;
    while (batch.anchors.size() < n) {
        // successive weighted draws; repeats are rejected
        const double r = unit(rng) * total;
        const auto pos = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) -
                                                  cumulative.begin());
        const ClassId c = eligible[std::min(pos, eligible.size() - 1)];
        if (!chosen.insert(c).second) continue;
        const auto& imgs = labels.members(c);
        std::uniform_int_distribution<std::size_t> pick(0, imgs.size() - 1);
        const std::size_t a = pick(rng);
        std::size_t p = pick(rng);
        while (p == a) p = pick(rng);
        batch.anchors.push_back(imgs[a]);
        batch.positives.push_back(imgs[p]);
    }
    return batch;
}

void validate_batch(const NPairBatch& batch, const LabelIndex& labels) {
    if (batch.temperature <= 0.0) throw ContractError("temperature must be positive");
    if (batch.anchors.size() != batch.positives.size()) throw ContractError("anchors and positives differ in length");
    if (batch.anchors.size() < 2) throw ContractError("N-pair batch needs N >= 2");
    std::set<ImageId> seen;
    std::set<ClassId> classes;
    for (std::size_t i = 0; i < batch.anchors.size(); ++i) {
        const auto c = labels.class_of(batch.anchors[i]);
        if (labels.class_of(batch.positives[i]) != c) throw ContractError("anchor/positive class mismatch");
        if (!classes.insert(c).second) throw ContractError("two pairs share a class");
        if (!seen.insert(batch.anchors[i]).second || !seen.insert(batch.positives[i]).second) {
            throw ContractError("batch images are not distinct");
        }
    }
}

}  // namespace itoo
