#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "itoo/core/types.hpp"

namespace itoo {

/// Sub-category-centered vector; also used for OOTD and user style vectors.
using StyleVector = std::vector<double>;
using SubCategoryMeans = std::map<std::string, std::vector<double>>;

/// Arithmetic mean of item vectors per sub-category.
SubCategoryMeans sub_category_means(const std::vector<ItemRecord>& items);

/// item vector minus its sub-category mean. Throws NotFoundError naming a missing sub-category.
StyleVector item_style_vector(const ItemRecord& item, const SubCategoryMeans& means);

/// Mean of the style vectors of the OOTD's items. Throws ContractError for an empty item
/// list and NotFoundError for an unknown item.
StyleVector ootd_style_vector(const OotdPost& ootd, const std::map<ItemId, StyleVector>& item_styles);

/// w_m = ((H - m + 1) / H)^alpha for m = 1..count, count <= H; m = 1 is the most recent.
std::vector<double> recency_weights(std::size_t count, std::size_t history, double alpha);

/// Recency-weighted average of the first min(H, n) vectors (newest first). Empty input -> nullopt.
std::optional<StyleVector> recency_weighted_average(const std::vector<const StyleVector*>& newest_first,
                                                    std::size_t history, double alpha);

/// Weighted average over the user's most recent view/like OOTDs with known style vectors.
/// Throws ColdStartError when there are none.
StyleVector user_style_vector(const UserProfile& user, const std::map<OotdId, StyleVector>& ootd_styles,
                              std::size_t history, double alpha);
std::optional<StyleVector> try_user_style_vector(const UserProfile& user,
                                                 const std::map<OotdId, StyleVector>& ootd_styles,
                                                 std::size_t history, double alpha);

/// lambda * cos(o1, o2) + (1 - lambda) * jaccard(tags1, tags2).
double semantic_ootd_similarity(const StyleVector& o1, const std::set<std::string>& tags1, const StyleVector& o2,
                                const std::set<std::string>& tags2, double lambda_o);

struct UserSimilarity {
    double value = 0.0;
    bool content_only = false;  // a style vector was missing; the tag term alone was used
};

/// lambda * cos(u1, u2) + (1 - lambda) * jaccard(prefs1, prefs2); a missing style vector
/// drops the cosine term (lambda treated as 0).
UserSimilarity semantic_user_similarity(const std::optional<StyleVector>& u1, const std::set<std::string>& prefs1,
                                        const std::optional<StyleVector>& u2, const std::set<std::string>& prefs2,
                                        double lambda_u);

}  // namespace itoo
