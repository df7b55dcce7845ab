#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "itoo/core/errors.hpp"
#include "itoo/metric/evaluate.hpp"
#include "itoo/metric/ntxent.hpp"
#include "itoo/metric/sampler.hpp"
#include "itoo/metric/table.hpp"
#include "itoo/metric/trainer.hpp"
#include "test_support.hpp"

using namespace itoo;

namespace {

std::vector<LabeledImage> grid_labels(std::size_t classes, std::size_t per_class, const std::string& source = "default",
                                      ImageId first = 1, ClassId first_class = 0) {
    std::vector<LabeledImage> out;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
            out.push_back({first + c * per_class + k, static_cast<ClassId>(first_class + c), source});
        }
    }
    return out;
}

EmbeddingTable table_of(const std::map<ImageId, std::vector<double>>& rows) {
    EmbeddingTable t(rows.begin()->second.size());
    for (const auto& [id, r] : rows) t.add(id, r);
    return t;
}

NPairBatch batch_of(std::vector<ImageId> a, std::vector<ImageId> p, double tau) {
    NPairBatch b;
    b.anchors = std::move(a);
    b.positives = std::move(p);
    b.temperature = tau;
    return b;
}

// Direct transcription of the loss definition, independent of the library kernel.
double reference_loss(const EmbeddingTable& t, const NPairBatch& b) {
    auto unit = [&](ImageId id) {
        auto r = t.row(id);
        double n = 0;
        for (double x : r) n += x * x;
        std::vector<double> u(r.begin(), r.end());
        for (auto& x : u) x /= std::sqrt(n);
        return u;
    };
    double total = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto a = unit(b.anchors[i]);
        double denom = 0, num = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const auto p = unit(b.positives[j]);
            double c = 0;
            for (std::size_t k = 0; k < a.size(); ++k) c += a[k] * p[k];
            const double e = std::exp(c / b.temperature);
            denom += e;
            if (i == j) num = e;
        }
        total += -std::log(num / denom);
    }
    return total / static_cast<double>(b.size());
}

}  // namespace

TEST_CASE("NT-Xent of two orthogonal matched pairs at tau=1 is -log(e/(e+1))") {
    const auto t = table_of({{1, {1, 0}}, {2, {1, 0}}, {3, {0, 1}}, {4, {0, 1}}});
    const auto b = batch_of({1, 3}, {2, 4}, 1.0);
    const double expect = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(expect == doctest::Approx(0.313262).epsilon(1e-6));
    CHECK(nt_xent_loss(t, b) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("identical embeddings give loss log N and a zero gradient") {
    std::map<ImageId, std::vector<double>> rows;
    for (ImageId id = 1; id <= 8; ++id) rows[id] = {0.3, -1.2, 2.0};
    const auto t = table_of(rows);
    const auto b = batch_of({1, 3, 5, 7}, {2, 4, 6, 8}, 0.1);
    const auto lg = nt_xent_gradient(t, b);
    CHECK(lg.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    for (const auto& [id, g] : lg.gradient) {
        for (double x : g) CHECK(std::abs(x) < 1e-12);
    }
}

TEST_CASE("loss falls toward zero as the temperature drops on separated classes") {
    const auto t = table_of({{1, {1, 0, 0}}, {2, {1, 0, 0}}, {3, {0, 1, 0}}, {4, {0, 1, 0}}, {5, {0, 0, 1}},
                             {6, {0, 0, 1}}});
    double prev = 1e300;
    for (double tau : {1.0, 0.5, 0.1}) {
        const double l = nt_xent_loss(t, batch_of({1, 3, 5}, {2, 4, 6}, tau));
        CHECK(l >= 0.0);
        CHECK(l < prev);
        prev = l;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("loss rejects a non-positive temperature") {
    const auto t = table_of({{1, {1, 0}}, {2, {1, 0}}, {3, {0, 1}}, {4, {0, 1}}});
    CHECK_THROWS_AS(nt_xent_loss(t, batch_of({1, 3}, {2, 4}, 0.0)), ContractError);
}

TEST_CASE("loss kernel matches the reference transcription") {
    std::mt19937_64 rng(1);
    const auto t = EmbeddingTable::random(std::vector<ImageId>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 5, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ImageId> ids{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        std::shuffle(ids.begin(), ids.end(), rng);
        const auto b = batch_of({ids[0], ids[1], ids[2], ids[3], ids[4]}, {ids[5], ids[6], ids[7], ids[8], ids[9]}, 0.2);
        CHECK(nt_xent_loss(t, b) == doctest::Approx(reference_loss(t, b)).epsilon(1e-12));
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    const double eps = 1e-4;
    for (int trial = 0; trial < 20; ++trial) {
        std::map<ImageId, std::vector<double>> rows;
        for (ImageId id = 1; id <= 12; ++id) {
            std::vector<double> r(8);
            for (auto& x : r) x = g(rng);
            rows[id] = r;
        }
        auto t = table_of(rows);
        const auto b = batch_of({1, 2, 3, 4, 5, 6}, {7, 8, 9, 10, 11, 12}, 0.5);
        const auto lg = nt_xent_gradient(t, b);
        double worst = 0;
        for (ImageId id = 1; id <= 12; ++id) {
            for (std::size_t k = 0; k < 8; ++k) {
                const double orig = t.row(id)[k];
                t.row_mut(id)[k] = orig + eps;
                const double up = reference_loss(t, b);
                t.row_mut(id)[k] = orig - eps;
                const double down = reference_loss(t, b);
                t.row_mut(id)[k] = orig;
                const double fd = (up - down) / (2 * eps);
                const double an = lg.gradient.at(id)[k];
                worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}));
            }
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("rows outside the batch receive no gradient") {
    const auto t = EmbeddingTable::random(std::vector<ImageId>{1, 2, 3, 4, 5, 6}, 4, 9);
    const auto lg = nt_xent_gradient(t, batch_of({1, 3}, {2, 4}, 0.1));
    CHECK(lg.gradient.count(5) == 0);
    CHECK(lg.gradient.count(6) == 0);
    CHECK(lg.gradient.size() == 4);
}

TEST_CASE("loss is invariant under a global rotation") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    const std::vector<ImageId> ids{1, 2, 3, 4, 5, 6, 7, 8};
    const auto t = EmbeddingTable::random(ids, 6, 5);
    // random orthogonal matrix from Gram-Schmidt
    std::vector<std::vector<double>> q(6, std::vector<double>(6));
    for (auto& row : q) for (auto& x : row) x = g(rng);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double d = 0;
            for (std::size_t k = 0; k < 6; ++k) d += q[i][k] * q[j][k];
            for (std::size_t k = 0; k < 6; ++k) q[i][k] -= d * q[j][k];
        }
        double n = 0;
        for (double x : q[i]) n += x * x;
        for (auto& x : q[i]) x /= std::sqrt(n);
    }
    EmbeddingTable rotated(6);
    for (ImageId id : ids) {
        std::vector<double> r(6, 0.0);
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t k = 0; k < 6; ++k) r[i] += q[i][k] * t.row(id)[k];
        }
        rotated.add(id, r);
    }
    const auto b = batch_of({1, 2, 3, 4}, {5, 6, 7, 8}, 0.1);
    CHECK(std::abs(nt_xent_loss(t, b) - nt_xent_loss(rotated, b)) <= 1e-9);
}

TEST_CASE("the 2x2 case has a unique batch up to ordering") {
    const LabelIndex labels(grid_labels(2, 2));
    std::mt19937_64 rng(6);
    for (int i = 0; i < 20; ++i) {
        const auto b = sample_npair_batch(labels, 2, 0.1, rng);
        CHECK_NOTHROW(validate_batch(b, labels));
        std::set<ImageId> all(b.anchors.begin(), b.anchors.end());
        all.insert(b.positives.begin(), b.positives.end());
        CHECK(all == std::set<ImageId>{1, 2, 3, 4});
    }
}

TEST_CASE("sampled batches use N distinct classes and 2N distinct images") {
    const LabelIndex labels(grid_labels(100, 3));
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const auto b = sample_npair_batch(labels, 5, 0.1, rng);
        CHECK(b.size() == 5);
        CHECK_NOTHROW(validate_batch(b, labels));
    }
    CHECK_THROWS_AS(sample_npair_batch(labels, 101, 0.1, rng), std::runtime_error);
}

TEST_CASE("validate_batch catches broken batches") {
    const LabelIndex labels(grid_labels(3, 2));
    CHECK_THROWS_AS(validate_batch(batch_of({1, 3}, {2, 5}, 0.1), labels), ContractError);
    CHECK_THROWS_AS(validate_batch(batch_of({1, 2}, {2, 1}, 0.1), labels), ContractError);
    CHECK_THROWS_AS(validate_batch(batch_of({1}, {2}, 0.1), labels), ContractError);
}

TEST_CASE("source weights 2:1 draw the heavier source twice as often") {
    auto labels_vec = grid_labels(50, 2, "A");
    const auto b_part = grid_labels(50, 2, "B", 1000, 50);
    labels_vec.insert(labels_vec.end(), b_part.begin(), b_part.end());
    const LabelIndex labels(labels_vec);
    std::mt19937_64 rng(8);
    const SamplingWeights w{{"A", 2.0}, {"B", 1.0}};
    const int batches = 10000;
    double a_count = 0;
    for (int i = 0; i < batches; ++i) {
        const auto b = sample_npair_batch(labels, 2, 0.1, rng, w);
        for (ImageId id : b.anchors) a_count += labels.source_of(labels.class_of(id)) == "A";
    }
    // exact expectation for two successive weighted draws without replacement
    const double p_first = 100.0 / 150.0;
    const double expect_a_per_batch = p_first + p_first * (98.0 / 148.0) + (1 - p_first) * (100.0 / 149.0);
    const double exp_a = expect_a_per_batch * batches;
    const double exp_b = 2.0 * batches - exp_a;
    const double obs_b = 2.0 * batches - a_count;
    const double chi2 = (a_count - exp_a) * (a_count - exp_a) / exp_a + (obs_b - exp_b) * (obs_b - exp_b) / exp_b;
    CHECK(chi2 < 10.83);
    CHECK(a_count / obs_b == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("zero learning rate leaves the table unchanged with a flat loss curve") {
    // one batch of every class per epoch, and both images of a class share a row, so
    // resampling cannot move the loss
    const LabelIndex labels(grid_labels(20, 2));
    const auto base = EmbeddingTable::random(labels.images(), 8, 1);
    EmbeddingTable init(8);
    for (ImageId id : labels.images()) init.add(id, base.row(id % 2 ? id : id - 1));
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 5;
    cfg.batch_pairs = 20;
    const auto r = train(init, labels, cfg);
    CHECK(r.table == init);
    REQUIRE(r.epoch_loss.size() == 5);
    for (double l : r.epoch_loss) CHECK(l == doctest::Approx(r.epoch_loss[0]).epsilon(1e-12));
}

TEST_CASE("training is deterministic for a fixed seed") {
    const LabelIndex labels(grid_labels(30, 3));
    const auto init = EmbeddingTable::random(labels.images(), 8, 2);
    TrainConfig cfg;
    cfg.epochs = 10;
    const auto a = train(init, labels, cfg);
    const auto b = train(init, labels, cfg);
    CHECK(a.table == b.table);
    CHECK(a.epoch_loss == b.epoch_loss);
    cfg.seed = 99;
    CHECK_FALSE(train(init, labels, cfg).table == a.table);
}

TEST_CASE("smoothed loss curve is non-increasing and training lowers the loss") {
    const LabelIndex labels(grid_labels(40, 3));
    TrainConfig cfg;
    cfg.epochs = 30;
    const auto r = train(EmbeddingTable::random(labels.images(), 16, 3), labels, cfg);
    for (std::size_t i = 1; i < r.smoothed_loss.size(); ++i) CHECK(r.smoothed_loss[i] <= r.smoothed_loss[i - 1]);
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
}

TEST_CASE("diverging training aborts with diagnostics") {
    const LabelIndex labels(grid_labels(10, 2));
    auto t = EmbeddingTable::random(labels.images(), 4, 4);
    TrainConfig cfg;
    cfg.learning_rate = std::numeric_limits<double>::infinity();
    cfg.epochs = 3;
    CHECK_THROWS_AS(train(t, labels, cfg), TrainingDiverged);
}

TEST_CASE("exact duplicate gallery embeddings give top-1 of 1") {
    std::vector<LabeledImage> lv;
    std::map<ImageId, std::vector<double>> rows;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<ImageId> queries, gallery;
    for (ClassId c = 0; c < 50; ++c) {
        std::vector<double> r(6);
        for (auto& x : r) x = g(rng);
        rows[c * 2 + 1] = r;
        rows[c * 2 + 2] = r;
        lv.push_back({c * 2 + 1, c, "default"});
        lv.push_back({c * 2 + 2, c, "default"});
        queries.push_back(c * 2 + 1);
        gallery.push_back(c * 2 + 2);
    }
    const auto report = evaluate_topk(table_of(rows), queries, gallery, LabelIndex(lv));
    CHECK(report.at(1) == 1.0);
    CHECK(report.n_queries == 50);
}

TEST_CASE("random embeddings retrieve at chance level") {
    std::vector<LabeledImage> lv;
    std::vector<ImageId> queries, gallery;
    for (ClassId c = 0; c < 1000; ++c) {
        lv.push_back({c + 1, c, "default"});
        lv.push_back({c + 100001, c, "default"});
        gallery.push_back(c + 1);
        queries.push_back(c + 100001);
    }
    const LabelIndex labels(lv);
    const auto t = EmbeddingTable::random(labels.images(), 16, 6);
    const auto r = evaluate_topk(t, queries, gallery, labels, {1});
    const double p = 0.001;
    const double sigma = std::sqrt(p * (1 - p) / 1000.0);
    CHECK(r.at(1) <= p + 3 * sigma);
}

TEST_CASE("top-k accuracy is monotone in k and excluded queries are reported") {
    std::vector<LabeledImage> lv = grid_labels(30, 2);
    lv.push_back({999, 777, "default"});
    const LabelIndex labels(lv);
    const auto t = EmbeddingTable::random(labels.images(), 8, 7);
    std::vector<ImageId> queries, gallery;
    for (const auto& l : lv) (l.image_id % 2 ? queries : gallery).push_back(l.image_id);
    const auto r = evaluate_topk(t, queries, gallery, labels, {1, 5, 10, 20});
    CHECK(r.n_excluded == 1);
    CHECK(r.n_queries == 30);
    for (std::size_t i = 1; i < r.ks.size(); ++i) CHECK(r.accuracy[i - 1] <= r.accuracy[i]);
}

TEST_CASE("serial and parallel evaluation agree") {
    const LabelIndex labels(grid_labels(60, 3));
    const auto t = EmbeddingTable::random(labels.images(), 8, 8);
    const auto a = evaluate_self_retrieval(t, labels, kDefaultKs, Exec::serial);
    const auto b = evaluate_self_retrieval(t, labels, kDefaultKs, Exec::parallel);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.to_json_lines() == b.to_json_lines());
}

TEST_CASE("retriever-based evaluation matches table-based evaluation") {
    const LabelIndex labels(grid_labels(20, 2));
    const auto t = EmbeddingTable::random(labels.images(), 8, 9);
    std::vector<ImageId> queries, gallery;
    for (ImageId id : labels.images()) (id % 2 ? queries : gallery).push_back(id);
    const auto direct = evaluate_topk(t, queries, gallery, labels, {1, 5});
    const Retriever brute = [&](ImageId q, std::size_t k) {
        std::vector<std::pair<double, ImageId>> s;
        for (ImageId g : gallery) {
            double d = 0, nq = 0, ng = 0;
            for (std::size_t i = 0; i < t.dim(); ++i) {
                d += t.row(q)[i] * t.row(g)[i];
                nq += t.row(q)[i] * t.row(q)[i];
                ng += t.row(g)[i] * t.row(g)[i];
            }
            s.emplace_back(-d / std::sqrt(nq * ng), g);
        }
        std::sort(s.begin(), s.end());
        std::vector<ImageId> out;
        for (std::size_t i = 0; i < std::min(k, s.size()); ++i) out.push_back(s[i].second);
        return out;
    };
    const auto via = evaluate_topk(brute, queries, gallery, labels, {1, 5});
    CHECK(via.accuracy == direct.accuracy);
}

TEST_CASE("embedding tables round trip through vector files") {
    itoo::testing::TempDir dir;
    const auto t = EmbeddingTable::random(std::vector<ImageId>{5, 6, 7}, 4, 10);
    t.save(dir / "t.vec");
    const auto back = EmbeddingTable::load(dir / "t.vec");
    CHECK(back.ids() == t.ids());
    for (ImageId id : t.ids()) {
        for (std::size_t k = 0; k < 4; ++k) CHECK(back.row(id)[k] == doctest::Approx(t.row(id)[k]).epsilon(1e-6));
    }
}
