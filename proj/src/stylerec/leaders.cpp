#include "itoo/stylerec/leaders.hpp"

#include <random>

namespace itoo {

void FollowGraph::add_edge(const UserId& from, const UserId& to) {
    if (from == to) return;
    out[from].insert(to);
    in[to].insert(from);
}

std::size_t FollowGraph::follower_count(const UserId& u) const {
    const auto it = in.find(u);
    return it == in.end() ? 0 : it->second.size();
}

FollowGraph build_follow_graph(const std::vector<UserProfile>& users, const std::vector<InteractionEvent>& events) {
    FollowGraph g;
    for (const auto& u : users) {
        for (const auto& f : u.follows) g.add_edge(u.user_id, f);
    }
    for (const auto& e : events) {
        if (e.kind == InteractionKind::follow) g.add_edge(e.user_id, e.target_id);
    }
    return g;
}

namespace {

const std::set<UserId>* step_set(const FollowGraph& g, const UserId& u) {
    const auto o = g.out.find(u);
    if (o != g.out.end() && !o->second.empty()) return &o->second;
    const auto i = g.in.find(u);
    if (i != g.in.end() && !i->second.empty()) return &i->second;
    return nullptr;
}

}  // namespace

std::set<UserId> two_hop_neighbors(const FollowGraph& g, const UserId& start) {
    std::set<UserId> out;
    const auto* first = step_set(g, start);
    if (!first) return out;
    for (const auto& a : *first) {
        const auto* second = step_set(g, a);
        if (!second) continue;
        for (const auto& b : *second) {
            if (b != start) out.insert(b);
        }
    }
    return out;
}

std::map<UserId, std::size_t> random_walk_candidates(const FollowGraph& g, const UserId& start, std::size_t walks,
                                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<UserId, std::size_t> counts;
    auto pick = [&](const std::set<UserId>& s) -> const UserId& {
        std::uniform_int_distribution<std::size_t> d(0, s.size() - 1);
        return *std::next(s.begin(), static_cast<std::ptrdiff_t>(d(rng)));
    };
    for (std::size_t w = 0; w < walks; ++w) {
        const auto* first = step_set(g, start);
        if (!first) break;
        const UserId& a = pick(*first);
        const auto* second = step_set(g, a);
        if (!second) continue;
        const UserId& b = pick(*second);
        if (b != start) ++counts[b];
    }
    return counts;
}

}  // namespace itoo
