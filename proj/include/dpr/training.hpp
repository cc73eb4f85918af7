#pragma once

// Mini-batch training of the two towers with in-batch negatives.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dpr/dataset.hpp"
#include "dpr/dense_index.hpp"
#include "dpr/encoder.hpp"
#include "dpr/error.hpp"
#include "dpr/evaluator.hpp"
#include "dpr/io.hpp"

namespace dpr {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t epochs = 8;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  std::size_t dim = 128;
  std::size_t hash_dim = 16384;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamParams adam{};

  void validate() const {
    if (batch_size < 2) throw InvalidArgument("batch_size must be >= 2 for in-batch negatives");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw InvalidArgument("learning_rate must be finite and >= 0");
    if (dim == 0 || hash_dim == 0) throw InvalidArgument("dim and hash_dim must be >= 1");
  }
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double mean_train_loss = 0.0;
  std::optional<double> dev_hit_at_10;
  double wall_seconds = 0.0;
  std::size_t steps = 0;
};

template <typename Real>
struct TrainResult {
  EncoderModel<Real> model;
  std::vector<EpochMetrics> epochs;
  std::size_t dropped_remainders = 0;     // batches of size 1 skipped, summed over epochs
  std::size_t duplicate_candidates = 0;   // same passage id twice in one batch, summed over steps
};

// Index over every distinct passage referenced by `split`, in first-seen order.
template <typename Real>
FlatIndex candidate_pool_index(const EncoderModel<Real>& model, const DatasetSplit& split) {
  std::vector<Passage> pool;
  std::unordered_set<std::string> seen;
  auto add = [&](const Passage& p) {
    if (seen.insert(p.passage_id).second) pool.push_back(p);
  };
  for (const auto& inst : split.instances) {
    add(inst.positive);
    for (const auto& p : inst.hard_negatives) add(p);
    for (const auto& p : inst.random_negatives) add(p);
  }
  return build_dense_index(model, PassageStore(std::move(pool)));
}

template <typename Real>
double dev_hit_at_k(const EncoderModel<Real>& model, const DatasetSplit& dev, std::size_t k = 10) {
  const auto index = candidate_pool_index(model, dev);
  EvalConfig cfg;
  cfg.k_values = {k};
  cfg.match_mode = MatchMode::gold_passage_id;
  return evaluate(model, index, nullptr, eval_queries(dev.instances), cfg).per_k.at(k).hit_rate;
}

using EpochCallback = std::function<void(const EpochMetrics&)>;

template <typename Real>
TrainResult<Real> train(EncoderModel<Real> model, const DatasetSplit& train_split, const DatasetSplit* dev_split,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train_split.instances.size() < 2) throw InvalidArgument("training needs at least two instances");

  const auto encoded = encode_instances(train_split.instances, model.hash_dim());
  const std::size_t m = encoded.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  Optimizer<Real> opt(cfg.optimizer, cfg.learning_rate, model.dim() * model.hash_dim(), cfg.adam);
  TrainResult<Real> result;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < m; start += cfg.batch_size) {
      const std::size_t end = std::min(m, start + cfg.batch_size);
      if (end - start < 2) {
        ++result.dropped_remainders;
        continue;
      }
      std::vector<const EncodedInstance*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&encoded[order[i]]);
      BatchLossReport rep;
      const auto grads = batch_gradients(model, std::span<const EncodedInstance* const>(batch), &rep);
      opt.step(model, grads);
      loss_sum += rep.loss;
      ++steps;
      std::unordered_set<std::string_view> ids;
      for (const auto* e : batch) {
        if (!ids.insert(e->positive_id).second) ++result.duplicate_candidates;
      }
      for (const auto* e : batch) {
        for (const auto& id : e->negative_ids) {
          if (!ids.insert(id).second) ++result.duplicate_candidates;
        }
      }
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.steps = steps;
    em.mean_train_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
    if (dev_split && !dev_split->instances.empty()) em.dev_hit_at_10 = dev_hit_at_k(model, *dev_split, 10);
    em.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_epoch) on_epoch(em);
    result.epochs.push_back(em);
  }
  result.model = std::move(model);
  return result;
}

// Starts from a freshly initialised model seeded by cfg.seed.
inline TrainResult<float> train(const DatasetSplit& train_split, const DatasetSplit* dev_split, const TrainConfig& cfg,
                                const EpochCallback& on_epoch = {}) {
  cfg.validate();
  return train(EncoderModel<float>::random(cfg.dim, cfg.hash_dim, cfg.seed), train_split, dev_split, cfg, on_epoch);
}

inline std::string metrics_line(const EpochMetrics& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["mean_train_loss"] = m.mean_train_loss;
  j["dev_hit_at_10"] = m.dev_hit_at_10 ? nlohmann::ordered_json(*m.dev_hit_at_10) : nlohmann::ordered_json(nullptr);
  j["wall_seconds"] = m.wall_seconds;
  return j.dump();
}

inline void write_metrics(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path) {
  std::string out;
  for (const auto& m : metrics) out += metrics_line(m) + "\n";
  io::write_file(path, out);
}

}  // namespace dpr
