#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "itoo/core/errors.hpp"

namespace itoo {

template <typename T>
double dot(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw ContractError("dot: dimension mismatch " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

template <typename T>
double norm(std::span<const T> a) {
    double s = 0.0;
    for (T x : a) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

/// Cosine of the angle between a and b. Zero-norm input yields 0.
template <typename T>
double cosine_similarity(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw ContractError("cosine_similarity: dimension mismatch " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    return cosine_similarity(std::span<const double>(a), std::span<const double>(b));
}

inline double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    return cosine_similarity(std::span<const float>(a), std::span<const float>(b));
}

/// |a ∩ b| / |a ∪ b| over sorted associative containers; two empty sets give 0.
template <typename Set>
double jaccard_similarity(const Set& a, const Set& b) {
    std::size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline bool all_finite(std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace itoo
