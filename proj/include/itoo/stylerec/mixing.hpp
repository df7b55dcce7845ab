#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace itoo {

enum class Source { cf, weekly, segment, latent, graph, popular };

std::string_view to_string(Source s);

/// One entry of a recommendation response.
struct Ranked {
    std::string id;
    double score = 0.0;
    Source source = Source::cf;

    bool operator==(const Ranked&) const = default;
};

/// Per-source slot counts for K slots: floor(r_i K) plus largest remainders (ties to the
/// earlier source). Ratios are renormalized; all-zero ratios split evenly.
std::vector<std::size_t> quotas(const std::vector<double>& ratios, std::size_t k);

/// Round-robin over the sources in order, each taking its next unplaced id while it still
/// has quota. An id already placed is skipped (earliest slot wins). Slots left by exhausted
/// sources are then filled round-robin from whatever the sources still hold.
std::vector<Ranked> interleave_by_quota(const std::vector<std::vector<Ranked>>& lists,
                                        const std::vector<double>& ratios, std::size_t k);

}  // namespace itoo
