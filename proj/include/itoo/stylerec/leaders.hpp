#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "itoo/core/types.hpp"

namespace itoo {

/// Directed follow graph: out[a] holds the users a follows.
struct FollowGraph {
    std::map<UserId, std::set<UserId>> out;
    std::map<UserId, std::set<UserId>> in;

    void add_edge(const UserId& from, const UserId& to);
    std::size_t follower_count(const UserId& u) const;
};

FollowGraph build_follow_graph(const std::vector<UserProfile>& users, const std::vector<InteractionEvent>& events);

/// Users reachable in exactly two steps from start (start excluded).
std::set<UserId> two_hop_neighbors(const FollowGraph& g, const UserId& start);

/// Endpoints of `walks` two-step random walks from start with visit counts. Each step picks
/// uniformly among out-edges, or among in-edges when the node has none; a walk stuck on an
/// isolated node ends early and is not counted. The start node is never counted.
std::map<UserId, std::size_t> random_walk_candidates(const FollowGraph& g, const UserId& start, std::size_t walks,
                                                     std::uint64_t seed);

}  // namespace itoo
