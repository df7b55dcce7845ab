#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "itoo/core/parallel.hpp"
#include "itoo/core/types.hpp"
#include "itoo/stylerec/config.hpp"
#include "itoo/stylerec/leaders.hpp"
#include "itoo/stylerec/mixing.hpp"
#include "itoo/stylerec/style.hpp"
#include "itoo/stylerec/tfidf.hpp"

namespace itoo {

struct RecInputs {
    std::vector<ItemRecord> items;
    std::vector<OotdPost> ootds;
    std::vector<UserProfile> users;
    std::vector<InteractionEvent> events;
    Timestamp now{};
};

struct RecList {
    std::vector<Ranked> entries;
    bool cold_start = false;
};

/// Demographic segment: (gender, birth decade).
struct SegmentKey {
    std::string gender;
    int decade = 0;

    auto operator<=>(const SegmentKey&) const = default;
};

SegmentKey segment_of(const Demographics& d);

/// Recommender state built from one consistent set of stores. Reads are const and safe to run
/// concurrently; apply_interaction and add_ootd mutate and need exclusive access.
class Recommender {
public:
    Recommender(RecInputs inputs, RecConfig cfg);

    const RecConfig& config() const { return cfg_; }
    Timestamp now() const { return now_; }
    bool has_user(const UserId& u) const { return users_.count(u) != 0; }
    bool has_ootd(const OotdId& o) const { return ootds_.count(o) != 0; }
    const UserProfile& user(const UserId& u) const;
    const OotdPost& ootd(const OotdId& o) const;
    std::vector<UserId> user_ids() const;
    const std::map<OotdId, StyleVector>& ootd_styles() const { return ootd_styles_; }
    const SubCategoryMeans& means() const { return means_; }
    const TfidfModel& tfidf() const { return tfidf_; }
    const FollowGraph& follow_graph() const { return graph_; }

    std::optional<StyleVector> user_style(const UserId& u) const;
    std::optional<StyleVector> upload_style(const UserId& u) const;

    double semantic_ootd_similarity(const OotdId& a, const OotdId& b) const;
    UserSimilarity semantic_user_similarity(const UserId& a, const UserId& b) const;
    double cfcbf_user_similarity(const UserId& a, const UserId& b) const;
    double cfcbf_ootd_similarity(const OotdId& a, const OotdId& b) const;

    /// OOTDs the user viewed, liked or uploaded.
    std::set<OotdId> seen_by(const UserId& u) const;

    RecList recommend_user_based(const UserId& u, std::size_t k, Exec exec = Exec::parallel) const;
    RecList recommend_item_based(const UserId& u, std::size_t k, Exec exec = Exec::parallel) const;
    /// User-based and item-based lists interleaved 50/50.
    RecList recommend_cfcbf(const UserId& u, std::size_t k) const;

    /// Likes over the trailing 7 days, decayed by beta^d.
    std::vector<Ranked> weekly_best(const UserId& u, std::size_t k) const;
    /// Decayed likes from users in the same segment.
    std::vector<Ranked> segment_best(const UserId& u, std::size_t k) const;
    /// Decayed likes from everyone; every OOTD appears.
    std::vector<Ranked> popular_ootds(const UserId& u, std::size_t k) const;

    /// True when every CF weight of the user has decayed below the staleness floor.
    bool is_stale(const UserId& u) const;
    std::vector<Ranked> curate_feed(const UserId& u, std::size_t k) const;

    std::vector<Ranked> similar_style_ootds(const OotdId& o, std::size_t k) const;
    std::vector<Ranked> suggest_style_leaders(const UserId& u, std::size_t k) const;

    /// Live overlay: records the event and recomputes the acting user's profile and style.
    void apply_interaction(const InteractionEvent& e);
    /// Adds an OOTD and its items; items of unseen sub-categories are centered on themselves.
    void add_ootd(const OotdPost& o, const std::vector<ItemRecord>& items);

private:
    void require_user(const UserId& u) const;
    void rebuild_user(const UserId& u);
    std::vector<Ranked> rank_likes(const UserId& u, std::size_t k, Source source,
                                   const std::function<bool(const InteractionEvent&)>& keep) const;

    RecConfig cfg_;
    Timestamp now_{};
    std::map<ItemId, ItemRecord> items_;
    std::map<OotdId, OotdPost> ootds_;
    std::map<UserId, UserProfile> users_;
    std::vector<InteractionEvent> events_;
    std::map<UserId, std::vector<std::size_t>> events_by_user_;
    SubCategoryMeans means_;
    std::map<ItemId, StyleVector> item_styles_;
    std::map<OotdId, StyleVector> ootd_styles_;
    std::map<UserId, std::optional<StyleVector>> user_styles_;
    TfidfModel tfidf_;
    // Column view of the TF-IDF matrix: ootd -> (user -> weight).
    std::map<OotdId, std::map<UserId, double>> columns_;
    std::map<OotdId, double> column_norms_;
    FollowGraph graph_;
};

}  // namespace itoo
