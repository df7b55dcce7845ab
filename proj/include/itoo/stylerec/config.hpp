#pragma once

#include <cstdint>

#include "itoo/stylerec/tfidf.hpp"

namespace itoo {

struct FeedRatios {
    double cfcbf = 0.6;
    double weekly_best = 0.2;
    double segment_best = 0.2;
};

struct LeaderRatios {
    double latent = 0.4;
    double graph = 0.3;
    double segment = 0.15;
    double popular = 0.15;
};

struct RecConfig {
    double lambda_o = 0.5;
    double lambda_u = 0.5;
    double lambda_cf = 0.5;
    double shrinkage = 10.0;   // h
    double alpha = 0.5;        // recency decay of the style average
    double beta = 0.9;         // daily decay of TF
    std::size_t history = 50;  // H
    double stale_epsilon = 1e-3;
    std::size_t neighbors = 20;  // user-based CF neighborhood size
    KindWeights kind_weights;
    FeedRatios feed;
    LeaderRatios leaders;
    std::size_t walks = 100;
    std::uint64_t seed = 7;

    /// Throws ContractError when a value is out of range.
    void validate() const;
};

}  // namespace itoo
