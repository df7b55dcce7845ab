#include "itoo/stylerec/style.hpp"

#include <cmath>

#include "itoo/core/errors.hpp"
#include "itoo/core/vecmath.hpp"

namespace itoo {

SubCategoryMeans sub_category_means(const std::vector<ItemRecord>& items) {
    SubCategoryMeans sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& it : items) {
        const auto v = item_vector(it);
        auto& s = sums[it.sub_category];
        if (s.empty()) s.assign(v.size(), 0.0);
        if (s.size() != v.size()) {
            throw SchemaError("sub-category '" + it.sub_category + "': item vector length " +
                              std::to_string(v.size()) + " != " + std::to_string(s.size()));
        }
        for (std::size_t i = 0; i < v.size(); ++i) s[i] += v[i];
        ++counts[it.sub_category];
    }
    for (auto& [sub, s] : sums) {
        const double n = static_cast<double>(counts[sub]);
        for (double& x : s) x /= n;
    }
    return sums;
}

StyleVector item_style_vector(const ItemRecord& item, const SubCategoryMeans& means) {
    const auto it = means.find(item.sub_category);
    if (it == means.end()) throw NotFoundError("no mean for sub-category '" + item.sub_category + "'");
    StyleVector v = item_vector(item);
    if (v.size() != it->second.size()) {
        throw SchemaError("item " + std::to_string(item.item_id) + ": vector length differs from its mean");
    }
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= it->second[i];
    return v;
}

StyleVector ootd_style_vector(const OotdPost& ootd, const std::map<ItemId, StyleVector>& item_styles) {
    if (ootd.item_ids.empty()) throw ContractError("OOTD '" + ootd.ootd_id + "' has no items");
    StyleVector acc;
    for (ItemId id : ootd.item_ids) {
        const auto it = item_styles.find(id);
        if (it == item_styles.end()) {
            throw NotFoundError("OOTD '" + ootd.ootd_id + "': unknown item " + std::to_string(id));
        }
        if (acc.empty()) acc.assign(it->second.size(), 0.0);
        if (acc.size() != it->second.size()) throw SchemaError("OOTD '" + ootd.ootd_id + "': mixed dimensions");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += it->second[i];
    }
    const double n = static_cast<double>(ootd.item_ids.size());
    for (double& x : acc) x /= n;
    return acc;
}

std::vector<double> recency_weights(std::size_t count, std::size_t history, double alpha) {
    if (history == 0) throw ContractError("history window must be >= 1");
    if (count > history) throw ContractError("more terms than the history window");
    std::vector<double> w(count);
    const double h = static_cast<double>(history);
    for (std::size_t m = 1; m <= count; ++m) {
        w[m - 1] = std::pow((h - static_cast<double>(m) + 1.0) / h, alpha);
    }
    return w;
}

std::optional<StyleVector> recency_weighted_average(const std::vector<const StyleVector*>& newest_first,
                                                    std::size_t history, double alpha) {
    if (newest_first.empty()) return std::nullopt;
    const std::size_t n = std::min(history, newest_first.size());
    const auto w = recency_weights(n, history, alpha);
    StyleVector acc(newest_first.front()->size(), 0.0);
    double wsum = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        const auto& v = *newest_first[m];
        if (v.size() != acc.size()) throw SchemaError("style vectors of different dimensions");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w[m] * v[i];
        wsum += w[m];
    }
    for (double& x : acc) x /= wsum;
    return acc;
}

std::optional<StyleVector> try_user_style_vector(const UserProfile& user,
                                                 const std::map<OotdId, StyleVector>& ootd_styles,
                                                 std::size_t history, double alpha) {
    std::vector<const StyleVector*> seq;
    for (const auto& r : user.recent_interactions) {
        if (seq.size() == history) break;
        if (r.kind != InteractionKind::view && r.kind != InteractionKind::like) continue;
        const auto it = ootd_styles.find(r.ootd_id);
        if (it != ootd_styles.end()) seq.push_back(&it->second);
    }
    return recency_weighted_average(seq, history, alpha);
}

StyleVector user_style_vector(const UserProfile& user, const std::map<OotdId, StyleVector>& ootd_styles,
                              std::size_t history, double alpha) {
    auto v = try_user_style_vector(user, ootd_styles, history, alpha);
    if (!v) throw ColdStartError("user '" + user.user_id + "' has no view/like history");
    return std::move(*v);
}

double semantic_ootd_similarity(const StyleVector& o1, const std::set<std::string>& tags1, const StyleVector& o2,
                                const std::set<std::string>& tags2, double lambda_o) {
    return lambda_o * cosine_similarity(o1, o2) + (1.0 - lambda_o) * jaccard_similarity(tags1, tags2);
}

UserSimilarity semantic_user_similarity(const std::optional<StyleVector>& u1, const std::set<std::string>& prefs1,
                                        const std::optional<StyleVector>& u2, const std::set<std::string>& prefs2,
                                        double lambda_u) {
    const double jac = jaccard_similarity(prefs1, prefs2);
    if (!u1 || !u2) return {jac, true};
    return {lambda_u * cosine_similarity(*u1, *u2) + (1.0 - lambda_u) * jac, false};
}

}  // namespace itoo
