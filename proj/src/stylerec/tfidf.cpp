#include "itoo/stylerec/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "itoo/core/errors.hpp"

namespace itoo {

double KindWeights::of(InteractionKind k) const {
    switch (k) {
        case InteractionKind::view: return view;
        case InteractionKind::like: return like;
        default: return 0.0;
    }
}

double decay_factor(double beta, std::int64_t days) {
    return std::pow(beta, static_cast<double>(days));
}

double TfidfProfile::norm() const {
    double s = 0.0;
    for (const auto& [_, w] : weights) s += w * w;
    return std::sqrt(s);
}

double TfidfModel::idf_of(const OotdId& o) const {
    const auto it = idf.find(o);
    if (it != idf.end()) return it->second;
    return std::log((1.0 + static_cast<double>(documents)) / 2.0) + 1.0;
}

namespace {

bool counts(const InteractionEvent& e, const KindWeights& kinds) {
    return (e.kind == InteractionKind::view || e.kind == InteractionKind::like) && kinds.of(e.kind) > 0.0;
}

void check_not_future(const InteractionEvent& e, Timestamp now) {
    if (e.timestamp > now) {
        throw ContractError("event dated after snapshot time: " + format_iso8601(e.timestamp) + "," + e.user_id +
                            "," + std::string(to_string(e.kind)) + "," + e.target_id + " (now " +
                            format_iso8601(now) + ")");
    }
}

// Raw decayed tf and freshness for one user's events.
TfidfProfile raw_tf(const std::vector<const InteractionEvent*>& evs, Timestamp now, double beta,
                    const KindWeights& kinds) {
    TfidfProfile p;
    for (const auto* e : evs) {
        const double decay = decay_factor(beta, whole_days_between(e->timestamp, now));
        p.weights[e->target_id] += kinds.of(e->kind) * decay;
        p.freshness = std::max(p.freshness, decay);
    }
    return p;
}

}  // namespace

TfidfModel build_tfidf_profiles(const std::vector<InteractionEvent>& events, Timestamp now, double beta,
                                const KindWeights& kinds) {
    std::map<UserId, std::vector<const InteractionEvent*>> by_user;
    for (const auto& e : events) {
        check_not_future(e, now);
        if (counts(e, kinds)) by_user[e.user_id].push_back(&e);
    }
    TfidfModel m;
    m.documents = by_user.size();
    std::map<OotdId, std::size_t> df;
    for (const auto& [u, evs] : by_user) {
        m.profiles[u] = raw_tf(evs, now, beta, kinds);
        for (const auto& [o, _] : m.profiles[u].weights) ++df[o];
    }
    const double U = static_cast<double>(m.documents);
    for (const auto& [o, n] : df) m.idf[o] = std::log((1.0 + U) / (1.0 + static_cast<double>(n))) + 1.0;
    for (auto& [_, p] : m.profiles) {
        for (auto& [o, w] : p.weights) w *= m.idf[o];
    }
    return m;
}

TfidfProfile rebuild_user_profile(const std::vector<InteractionEvent>& user_events, const TfidfModel& model,
                                  Timestamp now, double beta, const KindWeights& kinds) {
    std::vector<const InteractionEvent*> evs;
    for (const auto& e : user_events) {
        check_not_future(e, now);
        if (counts(e, kinds)) evs.push_back(&e);
    }
    TfidfProfile p = raw_tf(evs, now, beta, kinds);
    for (auto& [o, w] : p.weights) w *= model.idf_of(o);
    return p;
}

double shrunk_cosine(const std::map<std::string, double>& r1, double norm1, const std::map<std::string, double>& r2,
                     double norm2, double shrinkage) {
    const double denom = norm1 * norm2 + shrinkage;
    if (denom == 0.0) return 0.0;
    const auto& small = r1.size() <= r2.size() ? r1 : r2;
    const auto& large = r1.size() <= r2.size() ? r2 : r1;
    double d = 0.0;
    for (const auto& [k, w] : small) {
        const auto it = large.find(k);
        if (it != large.end()) d += w * it->second;
    }
    return d / denom;
}

}  // namespace itoo
