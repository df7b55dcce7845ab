// Serial reference vs OpenMP path for the data-parallel kernels.
// Arg 0 selects the serial path, 1 the parallel one.

#include <benchmark/benchmark.h>

#include <random>

#include "itoo/metric/evaluate.hpp"
#include "itoo/service/fixtures.hpp"
#include "itoo/stylerec/recommender.hpp"
#include "itoo/vecindex/exact_search.hpp"
#include "itoo/vecindex/hnsw.hpp"

using namespace itoo;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

std::vector<float> random_unit(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<float> g;
    std::vector<float> v(d);
    double n = 0;
    for (auto& x : v) {
        x = g(rng);
        n += static_cast<double>(x) * x;
    }
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(n));
    return v;
}

struct VectorData {
    std::map<ItemId, std::vector<float>> items;
    std::vector<std::vector<float>> queries;
    FlatVectors store{128};
    HnswIndex index;

    VectorData() {
        std::mt19937_64 rng(1);
        for (ItemId id = 1; id <= 20000; ++id) {
            items[id] = random_unit(128, rng);
            store.add(id, items[id]);
        }
        for (int q = 0; q < 256; ++q) queries.push_back(random_unit(128, rng));
        index = HnswIndex::build(items, HnswParams{});
    }
};

const VectorData& vectors() {
    static const VectorData d;
    return d;
}

void BM_ExactTopkBatch(benchmark::State& state) {
    const auto& d = vectors();
    for (auto _ : state) benchmark::DoNotOptimize(exact_topk_batch(d.store, d.queries, 10, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.queries.size()));
}
BENCHMARK(BM_ExactTopkBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_HnswSearchBatch(benchmark::State& state) {
    const auto& d = vectors();
    for (auto _ : state) benchmark::DoNotOptimize(d.index.search_batch(d.queries, 10, 64, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.queries.size()));
}
BENCHMARK(BM_HnswSearchBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_EvaluateTopk(benchmark::State& state) {
    static const auto setup = [] {
        std::vector<LabeledImage> labels;
        for (ImageId id = 0; id < 3000; ++id) labels.push_back({id, id / 3});
        LabelIndex index(labels);
        auto table = EmbeddingTable::random(index.images(), 64, 3);
        return std::make_pair(std::move(index), std::move(table));
    }();
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_self_retrieval(setup.second, setup.first, kDefaultKs, exec_of(state)));
    }
}
BENCHMARK(BM_EvaluateTopk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_UserBasedCf(benchmark::State& state) {
    static const auto rec = [] {
        FixtureSpec spec;
        spec.users = 600;
        spec.ootds = 1500;
        spec.uploads = 0;
        const auto data = make_fixture_data(spec);
        RecInputs in;
        in.items = data.metadata.items;
        in.ootds = data.metadata.ootds;
        in.users = data.metadata.users;
        in.events = data.events;
        for (const auto& e : data.events) in.now = std::max(in.now, e.timestamp);
        return std::make_unique<Recommender>(std::move(in), RecConfig{});
    }();
    const auto users = rec->user_ids();
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(rec->recommend_user_based(users[i++ % users.size()], 20, exec_of(state)));
}
BENCHMARK(BM_UserBasedCf)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
