#pragma once

#include <map>
#include <vector>

#include "itoo/metric/sampler.hpp"
#include "itoo/metric/table.hpp"

namespace itoo {

struct LossAndGradient {
    double loss = 0.0;
    /// Gradient per participating row; rows outside the batch are absent (zero).
    std::map<ImageId, std::vector<double>> gradient;
};

/// Mean over anchors i of -log( exp(cos(a_i, p_i)/t) / sum_j exp(cos(a_i, p_j)/t) ).
double nt_xent_loss(const EmbeddingTable& table, const NPairBatch& batch);

/// Loss together with its exact gradient, taken through the L2 normalization.
LossAndGradient nt_xent_gradient(const EmbeddingTable& table, const NPairBatch& batch);

}  // namespace itoo
