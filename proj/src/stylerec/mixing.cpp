#include "itoo/stylerec/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "itoo/core/errors.hpp"

namespace itoo {

std::string_view to_string(Source s) {
    switch (s) {
        case Source::cf: return "cf";
        case Source::weekly: return "weekly";
        case Source::segment: return "segment";
        case Source::latent: return "latent";
        case Source::graph: return "graph";
        case Source::popular: return "popular";
    }
    return "cf";
}

std::vector<std::size_t> quotas(const std::vector<double>& ratios, std::size_t k) {
    for (double r : ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw ContractError("mixing ratios must be finite and >= 0");
    }
    const std::size_t n = ratios.size();
    std::vector<std::size_t> q(n, 0);
    if (n == 0) return q;
    double total = std::accumulate(ratios.begin(), ratios.end(), 0.0);
    std::vector<double> r = ratios;
    if (total == 0.0) {
        std::fill(r.begin(), r.end(), 1.0);
        total = static_cast<double>(n);
    }
    std::vector<double> rem(n);
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double exact = r[i] / total * static_cast<double>(k);
        // Guard against 0.6*10 landing at 5.999...
        const double fl = std::floor(exact + 1e-9);
        q[i] = static_cast<std::size_t>(fl);
        rem[i] = exact - fl;
        used += q[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t i = 0; used < k && i < n; ++i, ++used) ++q[order[i]];
    return q;
}

std::vector<Ranked> interleave_by_quota(const std::vector<std::vector<Ranked>>& lists,
                                        const std::vector<double>& ratios, std::size_t k) {
    if (lists.size() != ratios.size()) throw ContractError("one ratio per source list required");
    const auto q = quotas(ratios, k);
    const std::size_t n = lists.size();
    std::vector<std::size_t> cursor(n, 0), taken(n, 0);
    std::set<std::string> placed;
    std::vector<Ranked> out;

    auto next = [&](std::size_t s) -> const Ranked* {
        while (cursor[s] < lists[s].size()) {
            const Ranked& r = lists[s][cursor[s]++];
            if (!placed.count(r.id)) return &r;
        }
        return nullptr;
    };

    bool progress = true;
    while (out.size() < k && progress) {
        progress = false;
        for (std::size_t s = 0; s < n && out.size() < k; ++s) {
            if (taken[s] >= q[s]) continue;
            if (const Ranked* r = next(s)) {
                placed.insert(r->id);
                out.push_back(*r);
                ++taken[s];
                progress = true;
            }
        }
    }
    progress = true;
    while (out.size() < k && progress) {
        progress = false;
        for (std::size_t s = 0; s < n && out.size() < k; ++s) {
            if (const Ranked* r = next(s)) {
                placed.insert(r->id);
                out.push_back(*r);
                progress = true;
            }
        }
    }
    return out;
}

}  // namespace itoo
