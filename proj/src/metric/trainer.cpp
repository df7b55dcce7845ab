#include "itoo/metric/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "itoo/core/errors.hpp"
#include "itoo/metric/ntxent.hpp"

namespace itoo {

namespace {

std::vector<ClassId> epoch_pool(const LabelIndex& labels, const SamplingWeights& weights, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<ClassId> pool;
    for (ClassId c : labels.eligible_classes()) {
        auto it = weights.find(labels.source_of(c));
        const double w = it == weights.end() ? 1.0 : it->second;
        const double whole = std::floor(w);
        auto copies = static_cast<std::size_t>(whole);
        if (unit(rng) < w - whole) ++copies;
        pool.insert(pool.end(), copies, c);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    return pool;
}

// Greedy packing into batches of distinct classes; a repeated class waits for the next batch.
std::vector<std::vector<ClassId>> pack_batches(const std::vector<ClassId>& pool, std::size_t n) {
    std::vector<std::vector<ClassId>> batches;
    std::deque<ClassId> waiting(pool.begin(), pool.end());
    while (!waiting.empty()) {
        std::vector<ClassId> batch;
        std::set<ClassId> in_batch;
        std::deque<ClassId> deferred;
        while (!waiting.empty() && batch.size() < n) {
            const ClassId c = waiting.front();
            waiting.pop_front();
            if (in_batch.insert(c).second) {
                batch.push_back(c);
            } else {
                deferred.push_back(c);
            }
        }
        waiting.insert(waiting.begin(), deferred.begin(), deferred.end());
        if (batch.size() < 2) break;
        batches.push_back(std::move(batch));
    }
    return batches;
}

}  // namespace

TrainResult train(EmbeddingTable table, const LabelIndex& labels, const TrainConfig& cfg) {
    if (cfg.batch_pairs < 2) throw ContractError("train: batch_pairs must be at least 2");
    if (cfg.temperature <= 0.0) throw ContractError("train: temperature must be positive");
    if (labels.eligible_classes().size() < 2) throw ContractError("train: need two classes with two images each");
    for (ClassId c : labels.eligible_classes()) {
        for (ImageId id : labels.members(c)) {
            if (!table.contains(id)) throw ContractError("train: labeled image " + std::to_string(id) + " has no row");
        }
    }

    std::mt19937_64 rng(cfg.seed);
    TrainResult result;
    double ema = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = pack_batches(epoch_pool(labels, cfg.sampling_weights, rng), cfg.batch_pairs);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& classes : batches) {
            NPairBatch batch;
            batch.temperature = cfg.temperature;
            for (ClassId c : classes) {
                const auto& imgs = labels.members(c);
                std::uniform_int_distribution<std::size_t> pick(0, imgs.size() - 1);
                const std::size_t a = pick(rng);
                std::size_t p = pick(rng);
                while (p == a) p = pick(rng);
                batch.anchors.push_back(imgs[a]);
                batch.positives.push_back(imgs[p]);
            }
            const auto lg = nt_xent_gradient(table, batch);
            if (!std::isfinite(lg.loss)) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch << ", batch " << count << " (lr "
                    << cfg.learning_rate << ", temperature " << cfg.temperature << ")";
                throw TrainingDiverged(msg.str());
            }
            for (const auto& [id, g] : lg.gradient) {
                auto row = table.row_mut(id);
                for (std::size_t k = 0; k < g.size(); ++k) row[k] -= cfg.learning_rate * g[k];
            }
            sum += lg.loss;
            ++count;
        }
        const double mean = count ? sum / static_cast<double>(count) : 0.0;
        result.epoch_loss.push_back(mean);
        ema = epoch == 0 ? mean : 0.8 * ema + 0.2 * mean;
        const double smoothed = result.smoothed_loss.empty() ? ema : std::min(result.smoothed_loss.back(), ema);
        result.smoothed_loss.push_back(smoothed);
    }
    result.table = std::move(table);
    return result;
}

}  // namespace itoo
