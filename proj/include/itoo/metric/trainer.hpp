#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "itoo/metric/sampler.hpp"
#include "itoo/metric/table.hpp"

namespace itoo {

struct TrainConfig {
    std::size_t batch_pairs = 16;  // N
    double temperature = 0.1;
    double learning_rate = 0.1;
    std::size_t epochs = 100;
    SamplingWeights sampling_weights;
    std::uint64_t seed = 1;
};

struct TrainResult {
    EmbeddingTable table;
    std::vector<double> epoch_loss;     // mean batch loss per epoch
    std::vector<double> smoothed_loss;  // EMA clamped to be non-increasing
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Plain SGD over freshly re-sampled class pools each epoch. A class from a source with
/// weight w enters the epoch pool floor(w) times plus once more with probability frac(w).
/// Deterministic for a fixed seed.
TrainResult train(EmbeddingTable table, const LabelIndex& labels, const TrainConfig& cfg);

}  // namespace itoo
