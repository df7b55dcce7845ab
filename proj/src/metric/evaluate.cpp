#include "itoo/metric/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "itoo/core/errors.hpp"

namespace itoo {

namespace {

struct Scored {
    double score;
    ImageId id;
};

std::vector<double> unit_row(const EmbeddingTable& t, ImageId id) {
    const auto r = t.row(id);
    double ss = 0.0;
    for (double x : r) ss += x * x;
    const double n = std::sqrt(ss);
    std::vector<double> u(r.begin(), r.end());
    if (n > 0.0) {
        for (auto& x : u) x /= n;
    }
    return u;
}

// Rank (0-based) of the first same-class gallery image, or gallery size when none.
std::size_t first_hit_rank(const std::vector<double>& q, ImageId query_id, ClassId cls,
                           const std::vector<ImageId>& gallery, const std::vector<std::vector<double>>& gunit,
                           const LabelIndex& labels, std::size_t kmax) {
    std::vector<Scored> scored;
    scored.reserve(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g) {
        if (gallery[g] == query_id) continue;
        double s = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) s += q[k] * gunit[g][k];
        scored.push_back({s, gallery[g]});
    }
    const auto take = std::min(kmax, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [](const Scored& a, const Scored& b) { return a.score > b.score || (a.score == b.score && a.id < b.id); });
    for (std::size_t r = 0; r < take; ++r) {
        if (labels.class_of(scored[r].id) == cls) return r;
    }
    return gallery.size();
}

TopkReport summarize(const std::vector<std::size_t>& ks, const std::vector<std::size_t>& ranks,
                     const std::vector<char>& counted) {
    TopkReport rep;
    rep.ks = ks;
    rep.accuracy.assign(ks.size(), 0.0);
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (!counted[i]) {
            ++rep.n_excluded;
            continue;
        }
        ++rep.n_queries;
        for (std::size_t j = 0; j < ks.size(); ++j) {
            if (ranks[i] < ks[j]) rep.accuracy[j] += 1.0;
        }
    }
    if (rep.n_queries > 0) {
        for (auto& a : rep.accuracy) a /= static_cast<double>(rep.n_queries);
    }
    return rep;
}

void check_ks(const std::vector<std::size_t>& ks) {
    if (ks.empty()) throw ContractError("evaluate_topk: ks must not be empty");
    for (auto k : ks) {
        if (k == 0) throw ContractError("evaluate_topk: k must be positive");
    }
}

}  // namespace

double TopkReport::at(std::size_t k) const {
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] == k) return accuracy[i];
    }
    throw ContractError("k=" + std::to_string(k) + " not in report");
}

std::string TopkReport::to_json_lines() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        nlohmann::json j = {{"k", ks[i]}, {"accuracy", accuracy[i]}, {"n_queries", n_queries}, {"n_excluded", n_excluded}};
        out << j.dump() << '\n';
    }
    return out.str();
}

TopkReport evaluate_topk(const EmbeddingTable& table, const std::vector<ImageId>& queries,
                         const std::vector<ImageId>& gallery, const LabelIndex& labels,
                         const std::vector<std::size_t>& ks, Exec exec) {
    check_ks(ks);
    const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
    std::vector<std::vector<double>> gunit;
    gunit.reserve(gallery.size());
    std::set<ClassId> gallery_classes;
    for (ImageId g : gallery) {
        gunit.push_back(unit_row(table, g));
        gallery_classes.insert(labels.class_of(g));
    }
    std::vector<std::vector<double>> qunit;
    std::vector<ClassId> qclass;
    std::vector<char> counted(queries.size(), 0);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        qunit.push_back(unit_row(table, queries[i]));
        qclass.push_back(labels.class_of(queries[i]));
    }
    // a class counts as present only through a gallery image other than the query itself
    std::map<ClassId, std::size_t> gallery_count;
    for (ImageId g : gallery) ++gallery_count[labels.class_of(g)];
    const std::set<ImageId> gallery_set(gallery.begin(), gallery.end());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto it = gallery_count.find(qclass[i]);
        std::size_t available = it == gallery_count.end() ? 0 : it->second;
        if (gallery_set.count(queries[i])) --available;
        counted[i] = available > 0 ? 1 : 0;
    }

    std::vector<std::size_t> ranks(queries.size(), gallery.size());
    const auto n = static_cast<std::int64_t>(queries.size());
    if (exec == Exec::serial) {
        for (std::int64_t i = 0; i < n; ++i) {
            if (counted[i]) ranks[i] = first_hit_rank(qunit[i], queries[i], qclass[i], gallery, gunit, labels, kmax);
        }
    } else {
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < n; ++i) {
            if (counted[i]) ranks[i] = first_hit_rank(qunit[i], queries[i], qclass[i], gallery, gunit, labels, kmax);
        }
    }
    return summarize(ks, ranks, counted);
}

TopkReport evaluate_self_retrieval(const EmbeddingTable& table, const LabelIndex& labels,
                                   const std::vector<std::size_t>& ks, Exec exec) {
    const auto all = labels.images();
    return evaluate_topk(table, all, all, labels, ks, exec);
}

TopkReport evaluate_topk(const Retriever& retrieve, const std::vector<ImageId>& queries,
                         const std::vector<ImageId>& gallery, const LabelIndex& labels,
                         const std::vector<std::size_t>& ks) {
    check_ks(ks);
    const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
    const std::set<ImageId> gallery_set(gallery.begin(), gallery.end());
    std::map<ClassId, std::size_t> gallery_count;
    for (ImageId g : gallery) ++gallery_count[labels.class_of(g)];

    std::vector<std::size_t> ranks(queries.size(), gallery.size());
    std::vector<char> counted(queries.size(), 0);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const ClassId cls = labels.class_of(queries[i]);
        auto it = gallery_count.find(cls);
        std::size_t available = it == gallery_count.end() ? 0 : it->second;
        if (gallery_set.count(queries[i])) --available;
        if (available == 0) continue;
        counted[i] = 1;
        std::size_t r = 0;
        for (ImageId id : retrieve(queries[i], kmax + 1)) {
            if (id == queries[i] || !gallery_set.count(id)) continue;
            if (r >= kmax) break;
            if (labels.class_of(id) == cls) {
                ranks[i] = r;
                break;
            }
            ++r;
        }
    }
    return summarize(ks, ranks, counted);
}

}  // namespace itoo
