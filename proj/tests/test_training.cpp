#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "dpr/dpr.hpp"
#include "dpr/synthetic.hpp"
#include "oracles.hpp"

using namespace dpr;

namespace {

// Each question shares a unique rare token with its positive, so the data are separable.
DatasetSplit separable_split(std::size_t questions, std::uint64_t seed, std::size_t n_hard = 1) {
  synthetic::Config sc;
  sc.documents = questions * 2;
  sc.questions = questions;
  sc.words_per_passage = 40;
  sc.seed = seed;
  const auto c = synthetic::generate(sc);
  const auto store = build_store(c.documents, 100);
  auto inst = align_questions(parse_bioasq_json(c.bioasq.dump()), store);
  const auto bm = build_index(store);
  NegativeConfig nc;
  nc.n_hard = n_hard;
  attach_negatives(inst, store, bm, nc);
  return DatasetSplit{SplitName::train, std::move(inst)};
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.hash_dim = 1024;
  cfg.batch_size = 8;
  cfg.epochs = 4;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.batch_size = 1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.learning_rate = -1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.dim = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  const auto split = separable_split(24, 1);
  for (auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
    auto cfg = small_config();
    cfg.learning_rate = 0.0;
    cfg.optimizer = kind;
    const auto init = EncoderModel<float>::random(cfg.dim, cfg.hash_dim, cfg.seed);
    const auto res = train(init, split, nullptr, cfg);
    EXPECT_EQ(res.model, init);
  }
}

// One batch per epoch holds the same candidates every epoch, only in a different order.
TEST(Train, ZeroLearningRateLossConstantAcrossEpochs) {
  const auto split = separable_split(8, 2);
  ASSERT_EQ(split.instances.size(), 8u);
  auto cfg = small_config();
  cfg.learning_rate = 0.0;
  const auto res = train(split, nullptr, cfg);
  ASSERT_EQ(res.epochs.size(), 4u);
  for (const auto& e : res.epochs) {
    EXPECT_EQ(e.steps, 1u);
    EXPECT_NEAR(e.mean_train_loss, res.epochs[0].mean_train_loss, 1e-12);
  }
}

TEST(Train, SameSeedSameTrajectory) {
  const auto split = separable_split(30, 3);
  const auto dev = separable_split(10, 4);
  const auto cfg = small_config();
  const auto a = train(split, &dev, cfg);
  const auto b = train(split, &dev, cfg);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    EXPECT_EQ(a.epochs[i].mean_train_loss, b.epochs[i].mean_train_loss);
    EXPECT_EQ(a.epochs[i].dev_hit_at_10, b.epochs[i].dev_hit_at_10);
    EXPECT_EQ(a.epochs[i].epoch, i + 1);
  }
  auto other = cfg;
  other.seed = 6;
  EXPECT_NE(train(split, &dev, other).model, a.model);
}

TEST(Train, SeparableDataLossDecreases) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto split = separable_split(48, seed);
    auto cfg = small_config();
    cfg.epochs = 6;
    cfg.seed = seed;
    const auto res = train(split, nullptr, cfg);
    EXPECT_LT(res.epochs.back().mean_train_loss, res.epochs.front().mean_train_loss) << seed;
  }
}

TEST(Train, RemainderOfOneDropped) {
  auto split = separable_split(8, 7);
  split.instances.resize(5);
  auto cfg = small_config();
  cfg.batch_size = 2;
  cfg.epochs = 3;
  const auto res = train(split, nullptr, cfg);
  EXPECT_EQ(res.dropped_remainders, 3u);
  for (const auto& e : res.epochs) EXPECT_EQ(e.steps, 2u);
  cfg.batch_size = 4;  // 5 = 4 + 1
  EXPECT_EQ(train(split, nullptr, cfg).dropped_remainders, 3u);
  cfg.batch_size = 3;  // 5 = 3 + 2, nothing dropped
  EXPECT_EQ(train(split, nullptr, cfg).dropped_remainders, 0u);
}

TEST(Train, NeedsTwoInstances) {
  auto split = separable_split(8, 7);
  split.instances.resize(1);
  EXPECT_THROW(train(split, nullptr, small_config()), InvalidArgument);
}

TEST(Train, DevMetricRecorded) {
  const auto split = separable_split(16, 8);
  const auto dev = separable_split(6, 9);
  const auto res = train(split, &dev, small_config());
  for (const auto& e : res.epochs) {
    ASSERT_TRUE(e.dev_hit_at_10.has_value());
    EXPECT_GE(*e.dev_hit_at_10, 0.0);
    EXPECT_LE(*e.dev_hit_at_10, 1.0);
    EXPECT_GE(e.wall_seconds, 0.0);
  }
  EXPECT_FALSE(train(split, nullptr, small_config()).epochs[0].dev_hit_at_10.has_value());
}

TEST(Train, MetricsJsonl) {
  EpochMetrics m;
  m.epoch = 2;
  m.mean_train_loss = 0.5;
  m.dev_hit_at_10 = 0.25;
  m.wall_seconds = 1.5;
  EXPECT_EQ(metrics_line(m), R"({"epoch":2,"mean_train_loss":0.5,"dev_hit_at_10":0.25,"wall_seconds":1.5})");
  m.dev_hit_at_10.reset();
  EXPECT_NE(metrics_line(m).find(R"("dev_hit_at_10":null)"), std::string::npos);
  const auto path = std::filesystem::temp_directory_path() / "dpr_metrics.jsonl";
  write_metrics({m, m}, path);
  const auto text = io::read_file(path);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}
