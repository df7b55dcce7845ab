#include "itoo/stylerec/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "itoo/core/errors.hpp"
#include "itoo/core/vecmath.hpp"

namespace itoo {

void RecConfig::validate() const {
    auto unit = [](double x, const char* name) {
        if (!(x >= 0.0 && x <= 1.0)) throw ContractError(std::string(name) + " must be in [0, 1]");
    };
    auto open_unit = [](double x, const char* name) {
        if (!(x > 0.0 && x < 1.0)) throw ContractError(std::string(name) + " must be in (0, 1)");
    };
    unit(lambda_o, "lambda_o");
    unit(lambda_u, "lambda_u");
    unit(lambda_cf, "lambda_cf");
    open_unit(alpha, "alpha");
    open_unit(beta, "beta");
    if (!(shrinkage >= 0.0)) throw ContractError("shrinkage must be >= 0");
    if (history < 1) throw ContractError("history must be >= 1");
    if (!(stale_epsilon >= 0.0)) throw ContractError("stale_epsilon must be >= 0");
    if (kind_weights.view < 0.0 || kind_weights.like < 0.0) throw ContractError("kind weights must be >= 0");
    const double fsum = feed.cfcbf + feed.weekly_best + feed.segment_best;
    if (feed.cfcbf < 0 || feed.weekly_best < 0 || feed.segment_best < 0 || std::abs(fsum - 1.0) > 1e-9) {
        throw ContractError("feed ratios must be >= 0 and sum to 1");
    }
    if (leaders.latent < 0 || leaders.graph < 0 || leaders.segment < 0 || leaders.popular < 0) {
        throw ContractError("leader ratios must be >= 0");
    }
}

SegmentKey segment_of(const Demographics& d) {
    const int decade = d.birth_year > 0 ? d.birth_year / 10 * 10 : 0;
    return {d.gender, decade};
}

namespace {

bool is_feedback(InteractionKind k) { return k == InteractionKind::view || k == InteractionKind::like; }

bool is_ootd_event(InteractionKind k) { return k != InteractionKind::follow; }

void sort_ranked(std::vector<Ranked>& v) {
    std::sort(v.begin(), v.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
}

std::vector<Ranked> to_ranked(const std::map<std::string, double>& scores, Source src, std::size_t k,
                              bool positive_only) {
    std::vector<Ranked> out;
    for (const auto& [id, s] : scores) {
        if (!positive_only || s > 0.0) out.push_back({id, s, src});
    }
    sort_ranked(out);
    if (out.size() > k) out.resize(k);
    return out;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

Recommender::Recommender(RecInputs in, RecConfig cfg) : cfg_(std::move(cfg)), now_(in.now) {
    cfg_.validate();
    for (auto& it : in.items) items_[it.item_id] = std::move(it);
    std::vector<ItemRecord> all;
    all.reserve(items_.size());
    for (const auto& [_, it] : items_) all.push_back(it);
    means_ = sub_category_means(all);
    for (const auto& [id, it] : items_) item_styles_[id] = item_style_vector(it, means_);
    for (auto& o : in.ootds) {
        ootd_styles_[o.ootd_id] = ootd_style_vector(o, item_styles_);
        ootds_[o.ootd_id] = std::move(o);
    }
    for (auto& u : in.users) {
        u.recent_interactions.clear();
        users_[u.user_id] = std::move(u);
    }

    events_ = std::move(in.events);
    std::stable_sort(events_.begin(), events_.end(),
                     [](const InteractionEvent& a, const InteractionEvent& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const auto& e = events_[i];
        if (!users_.count(e.user_id)) throw NotFoundError("event references unknown user '" + e.user_id + "'");
        if (is_ootd_event(e.kind)) {
            if (!ootds_.count(e.target_id)) {
                throw NotFoundError("event references unknown OOTD '" + e.target_id + "'");
            }
            push_recent(users_[e.user_id], {e.target_id, e.kind, e.timestamp});
        } else {
            if (!users_.count(e.target_id)) {
                throw NotFoundError("follow event references unknown user '" + e.target_id + "'");
            }
            if (e.target_id != e.user_id) users_[e.user_id].follows.insert(e.target_id);
        }
        events_by_user_[e.user_id].push_back(i);
    }

    tfidf_ = build_tfidf_profiles(events_, now_, cfg_.beta, cfg_.kind_weights);
    for (const auto& [u, p] : tfidf_.profiles) {
        for (const auto& [o, w] : p.weights) columns_[o][u] = w;
    }
    for (const auto& [o, col] : columns_) {
        double s = 0.0;
        for (const auto& [_, w] : col) s += w * w;
        column_norms_[o] = std::sqrt(s);
    }
    for (const auto& [id, u] : users_) {
        user_styles_[id] = try_user_style_vector(u, ootd_styles_, cfg_.history, cfg_.alpha);
    }
    std::vector<UserProfile> profiles;
    for (const auto& [_, u] : users_) profiles.push_back(u);
    graph_ = build_follow_graph(profiles, {});
}

void Recommender::require_user(const UserId& u) const {
    if (!users_.count(u)) throw NotFoundError("unknown user '" + u + "'");
}

const UserProfile& Recommender::user(const UserId& u) const {
    require_user(u);
    return users_.at(u);
}

const OotdPost& Recommender::ootd(const OotdId& o) const {
    const auto it = ootds_.find(o);
    if (it == ootds_.end()) throw NotFoundError("unknown OOTD '" + o + "'");
    return it->second;
}

std::vector<UserId> Recommender::user_ids() const {
    std::vector<UserId> ids;
    ids.reserve(users_.size());
    for (const auto& [id, _] : users_) ids.push_back(id);
    return ids;
}

std::optional<StyleVector> Recommender::user_style(const UserId& u) const {
    require_user(u);
    return user_styles_.at(u);
}

std::optional<StyleVector> Recommender::upload_style(const UserId& u) const {
    require_user(u);
    std::vector<const OotdPost*> ups;
    for (const auto& [_, o] : ootds_) {
        if (o.uploader_id == u) ups.push_back(&o);
    }
    std::sort(ups.begin(), ups.end(), [](const OotdPost* a, const OotdPost* b) {
        if (a->created_at != b->created_at) return a->created_at > b->created_at;
        return a->ootd_id < b->ootd_id;
    });
    std::vector<const StyleVector*> seq;
    for (const auto* o : ups) seq.push_back(&ootd_styles_.at(o->ootd_id));
    return recency_weighted_average(seq, cfg_.history, cfg_.alpha);
}

double Recommender::semantic_ootd_similarity(const OotdId& a, const OotdId& b) const {
    const auto& oa = ootd(a);
    const auto& ob = ootd(b);
    return itoo::semantic_ootd_similarity(ootd_styles_.at(a), oa.hashtags, ootd_styles_.at(b), ob.hashtags,
                                          cfg_.lambda_o);
}

UserSimilarity Recommender::semantic_user_similarity(const UserId& a, const UserId& b) const {
    const auto& ua = user(a);
    const auto& ub = user(b);
    return itoo::semantic_user_similarity(user_styles_.at(a), ua.preference_tags, user_styles_.at(b),
                                          ub.preference_tags, cfg_.lambda_u);
}

double Recommender::cfcbf_user_similarity(const UserId& a, const UserId& b) const {
    static const TfidfProfile empty;
    const auto pa = tfidf_.profiles.find(a);
    const auto pb = tfidf_.profiles.find(b);
    const auto& ra = pa == tfidf_.profiles.end() ? empty : pa->second;
    const auto& rb = pb == tfidf_.profiles.end() ? empty : pb->second;
    const double cf = shrunk_cosine(ra.weights, ra.norm(), rb.weights, rb.norm(), cfg_.shrinkage);
    return cfg_.lambda_cf * cf + (1.0 - cfg_.lambda_cf) * semantic_user_similarity(a, b).value;
}

double Recommender::cfcbf_ootd_similarity(const OotdId& a, const OotdId& b) const {
    static const std::map<UserId, double> empty;
    const auto ca = columns_.find(a);
    const auto cb = columns_.find(b);
    const auto& va = ca == columns_.end() ? empty : ca->second;
    const auto& vb = cb == columns_.end() ? empty : cb->second;
    const double na = ca == columns_.end() ? 0.0 : column_norms_.at(a);
    const double nb = cb == columns_.end() ? 0.0 : column_norms_.at(b);
    const double cf = shrunk_cosine(va, na, vb, nb, cfg_.shrinkage);
    return cfg_.lambda_cf * cf + (1.0 - cfg_.lambda_cf) * semantic_ootd_similarity(a, b);
}

std::set<OotdId> Recommender::seen_by(const UserId& u) const {
    require_user(u);
    std::set<OotdId> seen;
    const auto it = events_by_user_.find(u);
    if (it != events_by_user_.end()) {
        for (std::size_t i : it->second) {
            if (is_ootd_event(events_[i].kind)) seen.insert(events_[i].target_id);
        }
    }
    for (const auto& [id, o] : ootds_) {
        if (o.uploader_id == u) seen.insert(id);
    }
    return seen;
}

RecList Recommender::recommend_user_based(const UserId& u, std::size_t k, Exec exec) const {
    require_user(u);
    const auto self = tfidf_.profiles.find(u);
    if (self == tfidf_.profiles.end() || self->second.weights.empty()) return {{}, true};

    std::vector<UserId> others;
    for (const auto& [id, p] : tfidf_.profiles) {
        if (id != u && !p.weights.empty()) others.push_back(id);
    }
    std::vector<double> sims(others.size(), 0.0);
    std::exception_ptr err;
    const long n = static_cast<long>(others.size());
#pragma omp parallel for schedule(dynamic, 16) if (exec == Exec::parallel)
    for (long i = 0; i < n; ++i) {
        try {
            sims[i] = cfcbf_user_similarity(u, others[i]);
        } catch (...) {
#pragma omp critical(itoo_rec_err)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < others.size(); ++i) {
        if (sims[i] > 0.0) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return others[a] < others[b];
    });
    if (order.size() > cfg_.neighbors) order.resize(cfg_.neighbors);

    const auto seen = seen_by(u);
    std::map<std::string, double> scores;
    for (std::size_t i : order) {
        for (const auto& [o, w] : tfidf_.profiles.at(others[i]).weights) {
            if (!seen.count(o) && ootds_.count(o)) scores[o] += sims[i] * w;
        }
    }
    return {to_ranked(scores, Source::cf, k, true), false};
}

RecList Recommender::recommend_item_based(const UserId& u, std::size_t k, Exec exec) const {
    require_user(u);
    std::vector<OotdId> recent;
    for (const auto& r : users_.at(u).recent_interactions) {
        if (recent.size() == cfg_.history) break;
        if (is_feedback(r.kind) && std::find(recent.begin(), recent.end(), r.ootd_id) == recent.end()) {
            recent.push_back(r.ootd_id);
        }
    }
    if (recent.empty()) return {{}, true};
    const auto w = recency_weights(recent.size(), cfg_.history, cfg_.alpha);

    const auto seen = seen_by(u);
    std::vector<OotdId> cands;
    for (const auto& [id, _] : ootds_) {
        if (!seen.count(id)) cands.push_back(id);
    }
    std::vector<double> score(cands.size(), 0.0);
    std::exception_ptr err;
    const long n = static_cast<long>(cands.size());
#pragma omp parallel for schedule(dynamic, 16) if (exec == Exec::parallel)
    for (long i = 0; i < n; ++i) {
        try {
            double s = 0.0;
            for (std::size_t m = 0; m < recent.size(); ++m) s += w[m] * cfcbf_ootd_similarity(recent[m], cands[i]);
            score[i] = s;
        } catch (...) {
#pragma omp critical(itoo_rec_err)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    std::map<std::string, double> scores;
    for (std::size_t i = 0; i < cands.size(); ++i) scores[cands[i]] = score[i];
    return {to_ranked(scores, Source::cf, k, true), false};
}

RecList Recommender::recommend_cfcbf(const UserId& u, std::size_t k) const {
    auto ub = recommend_user_based(u, k);
    auto ib = recommend_item_based(u, k);
    if (ub.cold_start && ib.cold_start) return {{}, true};
    return {interleave_by_quota({ub.entries, ib.entries}, {0.5, 0.5}, k), false};
}

std::vector<Ranked> Recommender::rank_likes(const UserId& u, std::size_t k, Source source,
                                            const std::function<bool(const InteractionEvent&)>& keep) const {
    const auto seen = seen_by(u);
    std::map<std::string, double> scores;
    for (const auto& e : events_) {
        if (e.kind != InteractionKind::like || seen.count(e.target_id) || !keep(e)) continue;
        const auto d = whole_days_between(e.timestamp, now_);
        scores[e.target_id] += decay_factor(cfg_.beta, std::max<std::int64_t>(d, 0));
    }
    return to_ranked(scores, source, k, true);
}

std::vector<Ranked> Recommender::weekly_best(const UserId& u, std::size_t k) const {
    require_user(u);
    return rank_likes(u, k, Source::weekly, [&](const InteractionEvent& e) {
        const auto d = whole_days_between(e.timestamp, now_);
        return d >= 0 && d < 7;
    });
}

std::vector<Ranked> Recommender::segment_best(const UserId& u, std::size_t k) const {
    const auto seg = segment_of(user(u).demographics);
    return rank_likes(u, k, Source::segment, [&](const InteractionEvent& e) {
        return segment_of(users_.at(e.user_id).demographics) == seg;
    });
}

std::vector<Ranked> Recommender::popular_ootds(const UserId& u, std::size_t k) const {
    const auto seen = seen_by(u);
    std::map<std::string, double> scores;
    for (const auto& [id, _] : ootds_) {
        if (!seen.count(id)) scores[id] = 0.0;
    }
    for (const auto& e : events_) {
        if (e.kind != InteractionKind::like || !scores.count(e.target_id)) continue;
        const auto d = whole_days_between(e.timestamp, now_);
        scores[e.target_id] += decay_factor(cfg_.beta, std::max<std::int64_t>(d, 0));
    }
    return to_ranked(scores, Source::popular, k, false);
}

bool Recommender::is_stale(const UserId& u) const {
    require_user(u);
    const auto it = tfidf_.profiles.find(u);
    return it == tfidf_.profiles.end() || it->second.freshness < cfg_.stale_epsilon;
}

std::vector<Ranked> Recommender::curate_feed(const UserId& u, std::size_t k) const {
    require_user(u);
    const std::size_t all = ootds_.size();
    std::vector<Ranked> feed;
    if (is_stale(u)) {
        feed = interleave_by_quota({weekly_best(u, all), segment_best(u, all)},
                                   {cfg_.feed.weekly_best, cfg_.feed.segment_best}, k);
    } else {
        feed = interleave_by_quota({recommend_cfcbf(u, all).entries, weekly_best(u, all), segment_best(u, all)},
                                   {cfg_.feed.cfcbf, cfg_.feed.weekly_best, cfg_.feed.segment_best}, k);
    }
    if (feed.size() < k) {
        std::set<std::string> placed;
        for (const auto& r : feed) placed.insert(r.id);
        for (const auto& r : popular_ootds(u, all)) {
            if (feed.size() == k) break;
            if (!placed.count(r.id)) feed.push_back(r);
        }
    }
    return feed;
}

std::vector<Ranked> Recommender::similar_style_ootds(const OotdId& o, std::size_t k) const {
    ootd(o);
    std::map<std::string, double> scores;
    for (const auto& [id, _] : ootds_) {
        if (id != o) scores[id] = semantic_ootd_similarity(o, id);
    }
    return to_ranked(scores, Source::latent, k, false);
}

std::vector<Ranked> Recommender::suggest_style_leaders(const UserId& u, std::size_t k) const {
    require_user(u);
    std::set<UserId> excluded{u};
    if (const auto it = graph_.out.find(u); it != graph_.out.end()) {
        excluded.insert(it->second.begin(), it->second.end());
    }
    const std::size_t all = users_.size();

    std::map<std::string, double> latent;
    if (const auto& us = user_styles_.at(u)) {
        for (const auto& [v, _] : users_) {
            if (excluded.count(v)) continue;
            if (const auto vs = upload_style(v)) {
                const double c = cosine_similarity(*us, *vs);
                if (c > 0.0) latent[v] = c;
            }
        }
    }
    std::map<std::string, double> graph;
    for (const auto& [v, n] : random_walk_candidates(graph_, u, cfg_.walks, cfg_.seed ^ fnv1a(u))) {
        if (!excluded.count(v)) graph[v] = static_cast<double>(n) / static_cast<double>(cfg_.walks);
    }
    const auto seg = segment_of(users_.at(u).demographics);
    std::map<std::string, double> segment, popular;
    for (const auto& [v, p] : users_) {
        if (excluded.count(v)) continue;
        const double followers = static_cast<double>(graph_.follower_count(v));
        popular[v] = followers;
        if (segment_of(p.demographics) == seg) segment[v] = followers;
    }

    auto pop = to_ranked(popular, Source::popular, all, false);
    if (latent.empty() && graph.empty()) {
        if (pop.size() > k) pop.resize(k);
        return pop;
    }
    return interleave_by_quota({to_ranked(latent, Source::latent, all, true),
                                to_ranked(graph, Source::graph, all, true),
                                to_ranked(segment, Source::segment, all, false), pop},
                               {cfg_.leaders.latent, cfg_.leaders.graph, cfg_.leaders.segment, cfg_.leaders.popular},
                               k);
}

void Recommender::apply_interaction(const InteractionEvent& e) {
    require_user(e.user_id);
    if (is_ootd_event(e.kind)) {
        ootd(e.target_id);
    } else {
        require_user(e.target_id);
        if (e.target_id == e.user_id) throw ContractError("user cannot follow themselves");
    }
    if (e.timestamp > now_) now_ = e.timestamp;
    events_.push_back(e);
    events_by_user_[e.user_id].push_back(events_.size() - 1);
    auto& prof = users_[e.user_id];
    if (is_ootd_event(e.kind)) {
        push_recent(prof, {e.target_id, e.kind, e.timestamp});
    } else {
        prof.follows.insert(e.target_id);
        graph_.add_edge(e.user_id, e.target_id);
    }
    if (is_feedback(e.kind)) rebuild_user(e.user_id);
}

void Recommender::rebuild_user(const UserId& u) {
    std::vector<InteractionEvent> evs;
    for (std::size_t i : events_by_user_[u]) evs.push_back(events_[i]);
    auto fresh = rebuild_user_profile(evs, tfidf_, now_, cfg_.beta, cfg_.kind_weights);

    std::set<OotdId> touched;
    if (const auto old = tfidf_.profiles.find(u); old != tfidf_.profiles.end()) {
        for (const auto& [o, _] : old->second.weights) {
            columns_[o].erase(u);
            touched.insert(o);
        }
    }
    for (const auto& [o, w] : fresh.weights) {
        columns_[o][u] = w;
        touched.insert(o);
    }
    for (const auto& o : touched) {
        double s = 0.0;
        for (const auto& [_, w] : columns_[o]) s += w * w;
        column_norms_[o] = std::sqrt(s);
    }
    tfidf_.profiles[u] = std::move(fresh);
    user_styles_[u] = try_user_style_vector(users_[u], ootd_styles_, cfg_.history, cfg_.alpha);
}

void Recommender::add_ootd(const OotdPost& o, const std::vector<ItemRecord>& items) {
    require_user(o.uploader_id);
    if (ootds_.count(o.ootd_id)) throw ContractError("OOTD '" + o.ootd_id + "' already exists");
    for (const auto& it : items) {
        if (items_.count(it.item_id)) continue;
        if (!means_.count(it.sub_category)) means_[it.sub_category] = item_vector(it);
        item_styles_[it.item_id] = item_style_vector(it, means_);
        items_[it.item_id] = it;
    }
    ootd_styles_[o.ootd_id] = ootd_style_vector(o, item_styles_);
    ootds_[o.ootd_id] = o;
}

}  // namespace itoo
