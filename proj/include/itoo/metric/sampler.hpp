#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "itoo/ingest/labels.hpp"

namespace itoo {

/// Class membership lookup built from labeled images.
class LabelIndex {
public:
    LabelIndex() = default;
    explicit LabelIndex(const std::vector<LabeledImage>& labels);

    ClassId class_of(ImageId id) const;
    bool has(ImageId id) const { return class_of_.count(id) != 0; }
    const std::vector<ImageId>& members(ClassId c) const { return members_.at(c); }
    const std::string& source_of(ClassId c) const { return source_.at(c); }
    /// Classes with at least two images, ascending.
    const std::vector<ClassId>& eligible_classes() const { return eligible_; }
    const std::map<ClassId, std::vector<ImageId>>& classes() const { return members_; }
    std::vector<ImageId> images() const;

private:
    std::map<ImageId, ClassId> class_of_;
    std::map<ClassId, std::vector<ImageId>> members_;
    std::map<ClassId, std::string> source_;
    std::vector<ClassId> eligible_;
};

/// Relative draw weight per dataset source; sources not listed weigh 1.
using SamplingWeights = std::map<std::string, double>;

/// N anchor/positive pairs from N distinct classes. Each pair's positive doubles as a
/// negative for every other anchor.
struct NPairBatch {
    std::vector<ImageId> anchors;
    std::vector<ImageId> positives;
    double temperature = 0.1;

    std::size_t size() const { return anchors.size(); }
};

/// Draws N distinct classes (successive draws proportional to their source weight) and two
/// distinct images of each. Throws std::runtime_error when fewer than N classes have two images.
NPairBatch sample_npair_batch(const LabelIndex& labels, std::size_t n, double temperature, std::mt19937_64& rng,
                              const SamplingWeights& weights = {});

/// Throws ContractError when the batch breaks its invariants.
void validate_batch(const NPairBatch& batch, const LabelIndex& labels);

}  // namespace itoo
