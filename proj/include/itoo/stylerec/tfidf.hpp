#pragma once

#include <map>
#include <vector>

#include "itoo/core/types.hpp"

namespace itoo {

/// Contribution of one event to term frequency before decay.
struct KindWeights {
    double view = 1.0;
    double like = 3.0;

    double of(InteractionKind k) const;  // 0 for upload/follow
};

/// beta^days
double decay_factor(double beta, std::int64_t days);

/// Sparse decayed TF-IDF row of one user; absent OOTDs weigh 0.
struct TfidfProfile {
    std::map<OotdId, double> weights;
    double freshness = 0.0;  // largest beta^d over the user's view/like events

    double norm() const;
};

struct TfidfModel {
    std::map<UserId, TfidfProfile> profiles;
    std::map<OotdId, double> idf;
    std::size_t documents = 0;  // users with at least one view/like event

    /// idf of an OOTD; unseen OOTDs get the df = 1 value.
    double idf_of(const OotdId& o) const;
};

/// Users are documents and OOTDs are terms:
///   tf(u, o)  = sum over u's view/like events on o of kind_weight * beta^d,  d = whole days old
///   idf(o)    = ln((1 + U) / (1 + df(o))) + 1
///   weight    = tf * idf
/// Throws ContractError for events dated after `now`.
TfidfModel build_tfidf_profiles(const std::vector<InteractionEvent>& events, Timestamp now, double beta,
                                const KindWeights& kinds = {});

/// Recomputes one user's row against an existing model's idf (live-overlay path).
TfidfProfile rebuild_user_profile(const std::vector<InteractionEvent>& user_events, const TfidfModel& model,
                                  Timestamp now, double beta, const KindWeights& kinds = {});

/// (r1 . r2) / (|r1| |r2| + h); 0 when the denominator vanishes.
double shrunk_cosine(const std::map<std::string, double>& r1, double norm1, const std::map<std::string, double>& r2,
                     double norm2, double shrinkage);

}  // namespace itoo
