#include "itoo/metric/ntxent.hpp"

#include <algorithm>
#include <cmath>

#include "itoo/core/errors.hpp"

namespace itoo {

namespace {

struct Normalized {
    std::vector<std::vector<double>> unit;
    std::vector<double> norm;
};

Normalized normalize_rows(const EmbeddingTable& table, const std::vector<ImageId>& ids) {
    Normalized out;
    for (ImageId id : ids) {
        const auto r = table.row(id);
        double ss = 0.0;
        for (double x : r) ss += x * x;
        const double n = std::sqrt(ss);
        if (n == 0.0) throw ContractError("zero embedding for image " + std::to_string(id));
        std::vector<double> u(r.begin(), r.end());
        for (auto& x : u) x /= n;
        out.unit.push_back(std::move(u));
        out.norm.push_back(n);
    }
    return out;
}

double dotd(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// logits[i][j] = cos(anchor_i, positive_j) / t, and row-wise softmax probabilities
struct Forward {
    Normalized a;
    Normalized p;
    std::vector<std::vector<double>> prob;
    double loss = 0.0;
};

Forward forward(const EmbeddingTable& table, const NPairBatch& batch) {
    if (batch.temperature <= 0.0) throw ContractError("NT-Xent temperature must be positive");
    if (batch.anchors.size() != batch.positives.size() || batch.anchors.empty()) {
        throw ContractError("NT-Xent batch must hold matching, non-empty anchor/positive lists");
    }
    Forward f;
    f.a = normalize_rows(table, batch.anchors);
    f.p = normalize_rows(table, batch.positives);
    const std::size_t n = batch.anchors.size();
    f.prob.assign(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> logit(n);
        for (std::size_t j = 0; j < n; ++j) logit[j] = dotd(f.a.unit[i], f.p.unit[j]) / batch.temperature;
        const double mx = *std::max_element(logit.begin(), logit.end());
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            f.prob[i][j] = std::exp(logit[j] - mx);
            z += f.prob[i][j];
        }
        for (auto& x : f.prob[i]) x /= z;
        f.loss += -(logit[i] - mx) + std::log(z);
    }
    f.loss /= static_cast<double>(n);
    return f;
}

// gradient w.r.t. raw row given gradient g w.r.t. its unit vector u: (g - (g.u) u) / |row|
void accumulate_through_norm(std::vector<double>& dst, const std::vector<double>& g, const std::vector<double>& u,
                             double norm) {
    const double gu = dotd(g, u);
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += (g[k] - gu * u[k]) / norm;
}

}  // namespace

double nt_xent_loss(const EmbeddingTable& table, const NPairBatch& batch) {
    return forward(table, batch).loss;
}

LossAndGradient nt_xent_gradient(const EmbeddingTable& table, const NPairBatch& batch) {
    const Forward f = forward(table, batch);
    const std::size_t n = batch.anchors.size();
    const std::size_t d = table.dim();
    const double scale = 1.0 / (static_cast<double>(n) * batch.temperature);

    LossAndGradient out;
    out.loss = f.loss;
    for (std::size_t i = 0; i < n; ++i) {
        out.gradient.try_emplace(batch.anchors[i], d, 0.0);
        out.gradient.try_emplace(batch.positives[i], d, 0.0);
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> g_anchor(d, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double w = (f.prob[i][j] - (i == j ? 1.0 : 0.0)) * scale;
            for (std::size_t k = 0; k < d; ++k) g_anchor[k] += w * f.p.unit[j][k];
        }
        accumulate_through_norm(out.gradient[batch.anchors[i]], g_anchor, f.a.unit[i], f.a.norm[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> g_pos(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (f.prob[i][j] - (i == j ? 1.0 : 0.0)) * scale;
            for (std::size_t k = 0; k < d; ++k) g_pos[k] += w * f.a.unit[i][k];
        }
        accumulate_through_norm(out.gradient[batch.positives[j]], g_pos, f.p.unit[j], f.p.norm[j]);
    }
    return out;
}

}  // namespace itoo
