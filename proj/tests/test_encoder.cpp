#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "dpr/encoder.hpp"
#include "oracles.hpp"

using namespace dpr;

TEST(Featurize, EmptyTextIsZero) {
  const auto v = featurize("", 64);
  EXPECT_TRUE(v.empty());
  EXPECT_TRUE(featurize("... !!", 64).empty());
}

TEST(Featurize, SingleTokenOneHot) {
  const auto v = featurize("abc", 1024);
  ASSERT_EQ(v.nnz(), 1u);
  EXPECT_EQ(v.index[0], feature_bucket("abc", 1024));
  EXPECT_DOUBLE_EQ(v.value[0], 1.0);
}

TEST(Featurize, RepeatedTokensNormalised) {
  const auto v = featurize("a a b", 1 << 14);
  ASSERT_EQ(v.nnz(), 2u);
  double sq = 0.0;
  for (double x : v.value) sq += x * x;
  EXPECT_NEAR(sq, 1.0, 1e-15);
  const std::size_t ia = v.index[0] == feature_bucket("a", 1 << 14) ? 0 : 1;
  EXPECT_NEAR(v.value[ia], 2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(v.value[1 - ia], 1.0 / std::sqrt(5.0), 1e-15);
}

TEST(Featurize, CaseInsensitiveAndDeterministic) {
  EXPECT_EQ(featurize("Gene X regulates", 97), featurize("gene x REGULATES", 97));
  EXPECT_THROW(featurize("x", 0), InvalidArgument);
}

TEST(Encode, ZeroFeaturesGiveZeroEmbedding) {
  const auto m = EncoderModel<float>::random(8, 32, 1);
  for (float x : m.encode_question("")) EXPECT_EQ(x, 0.0f);
}

TEST(Encode, IdentityWeightsReproduceFeatures) {
  const std::size_t h = 16;
  EncoderModel<double> m(h, h);
  for (std::size_t i = 0; i < h; ++i) {
    m.at(Tower::question, i, i) = 1.0;
    m.at(Tower::passage, i, i) = 1.0;
  }
  const auto f = featurize("a b b c", h);
  const auto e = m.encode_question("a b b c");
  std::vector<double> dense(h, 0.0);
  for (std::size_t k = 0; k < f.nnz(); ++k) dense[f.index[k]] = f.value[k];
  EXPECT_EQ(e, dense);
}

TEST(Encode, DeterministicAndTowersIndependent) {
  const auto m = EncoderModel<float>::random(8, 64, 3);
  EXPECT_EQ(m.encode_question("same text"), m.encode_question("same text"));
  EXPECT_NE(m.encode_question("same text"), m.encode_passage(std::string_view("same text")));
  EXPECT_EQ(EncoderModel<float>::random(8, 64, 3), m);
  EXPECT_NE(EncoderModel<float>::random(8, 64, 4), m);
  const double bound = 1.0 / std::sqrt(64.0);
  for (float w : m.weights(Tower::question)) EXPECT_LE(std::abs(w), bound);
}

TEST(Sim, DotProduct) {
  EXPECT_EQ(sim(std::vector<float>{1, 2}, std::vector<float>{3, 4}), 11.0);
  EXPECT_EQ(sim(std::vector<float>{0, 0, 0}, std::vector<float>{5, -1, 2}), 0.0);
  EXPECT_THROW(sim(std::vector<float>{1}, std::vector<float>{1, 2}), DimensionError);
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n;
  for (int t = 0; t < 100; ++t) {
    std::vector<float> a(17), b(17);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    EXPECT_EQ(sim(a, b), sim(b, a));
  }
}

TEST(NllLoss, UniformCases) {
  EXPECT_NEAR(nll_loss(0.0, std::vector<double>{0.0}), 0.6931471805599453, 1e-12);
  EXPECT_NEAR(nll_loss(0.0, std::vector<double>{0.0, 0.0, 0.0}), 1.3862943611198906, 1e-12);
}

// ln(1 + e^-10) from a 40-digit evaluation: 4.539889921686464676948782930710559677299e-5
TEST(NllLoss, ConfidentPositive) {
  EXPECT_NEAR(nll_loss(10.0, std::vector<double>{0.0}), 4.5398899216864647e-05, 1e-18);
}

TEST(NllLoss, MatchesNaiveFormAndIsStable) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::uniform_int_distribution<std::size_t> n(1, 40);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> neg(n(rng));
    for (auto& x : neg) x = u(rng);
    const double pos = u(rng);
    const double a = nll_loss(pos, neg);
    const double b = oracle::naive_nll(pos, neg);
    EXPECT_LE(std::abs(a - b), 1e-9 * std::max(1e-300, std::abs(b)) + 1e-15) << a << " vs " << b;
  }
  const double big = nll_loss(1000.0, std::vector<double>{999.0, 0.0});
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, std::log1p(std::exp(-1.0)), 1e-12);
}

TEST(NllLoss, MonotoneAndShiftInvariant) {
  const std::vector<double> neg{0.3, -1.0, 2.0};
  EXPECT_GT(nll_loss(0.0, neg), nll_loss(0.5, neg));
  EXPECT_LT(nll_loss(0.0, neg), nll_loss(0.0, std::vector<double>{0.4, -1.0, 2.0}));
  std::vector<double> shifted;
  for (double x : neg) shifted.push_back(x + 123.25);
  EXPECT_NEAR(nll_loss(0.0, neg), nll_loss(123.25, shifted), 1e-12);
  EXPECT_GT(nll_loss(0.0, neg), 0.0);
  EXPECT_LT(nll_loss(60.0, std::vector<double>{0.0}), 1e-20);
}

TEST(Softmax, SumsToOne) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> xs(33);
    for (auto& x : xs) x = u(rng);
    const auto p = softmax(xs);
    double s = 0.0;
    for (double v : p) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

namespace {

std::vector<TrainingInstance> uniform_batch(std::size_t b, std::size_t hard) {
  std::mt19937_64 rng(1);
  return oracle::random_batch(rng, b, hard);
}

}  // namespace

TEST(BatchLoss, CandidateCounting) {
  const EncoderModel<double> zero(4, 16);  // every embedding is zero, so all candidates tie
  EXPECT_NEAR(batch_loss(zero, uniform_batch(2, 0)).loss, std::log(2.0), 1e-12);
  EXPECT_NEAR(batch_loss(zero, uniform_batch(2, 1)).loss, std::log(4.0), 1e-12);
  EXPECT_NEAR(batch_loss(zero, uniform_batch(16, 1)).loss, std::log(32.0), 1e-12);
  const auto rep = batch_loss(zero, uniform_batch(3, 0));
  EXPECT_EQ(rep.per_question_rank_of_positive, (std::vector<std::size_t>{1, 1, 1}));
}

TEST(BatchLoss, RejectsSingleQuestion) {
  const EncoderModel<double> zero(4, 16);
  EXPECT_THROW(batch_loss(zero, uniform_batch(1, 1)), InvalidArgument);
  EXPECT_THROW(batch_gradients(zero, uniform_batch(1, 0)), InvalidArgument);
}

TEST(BatchLoss, DuplicatePositivesKept) {
  auto batch = uniform_batch(3, 0);
  batch[2].positive = batch[0].positive;
  const EncoderModel<double> zero(4, 16);
  const auto rep = batch_loss(zero, batch);
  EXPECT_EQ(rep.duplicate_candidates, 1u);
  EXPECT_NEAR(rep.loss, std::log(3.0), 1e-12);
}

TEST(BatchLoss, RankOfPositive) {
  // question i only lights up feature i; passage j only feature j.
  EncoderModel<double> m(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    m.at(Tower::question, i, i) = 1.0;
    m.at(Tower::passage, i, i) = 1.0;
  }
  std::vector<EncodedInstance> enc(2);
  enc[0].question = SparseVector{{0}, {1.0}};
  enc[0].positive = SparseVector{{1}, {1.0}};
  enc[1].question = SparseVector{{1}, {1.0}};
  enc[1].positive = SparseVector{{1}, {1.0}};
  enc[0].positive_id = "a";
  enc[1].positive_id = "b";
  std::vector<const EncodedInstance*> ptrs{&enc[0], &enc[1]};
  const auto rep = batch_loss(m, std::span<const EncodedInstance* const>(ptrs));
  EXPECT_EQ(rep.per_question_rank_of_positive, (std::vector<std::size_t>{1, 1}));
  enc[1].positive = SparseVector{{2}, {1.0}};
  enc[0].positive = SparseVector{{3}, {1.0}};
  enc[0].question = SparseVector{{2}, {1.0}};
  const auto rep2 = batch_loss(m, std::span<const EncodedInstance* const>(ptrs));
  EXPECT_EQ(rep2.per_question_rank_of_positive[0], 2u);
}

TEST(BatchGradients, ZeroParametersGiveZeroGradient) {
  const EncoderModel<double> zero(4, 16);
  const auto g = batch_gradients(zero, uniform_batch(3, 1));
  for (double x : g.wq) EXPECT_EQ(x, 0.0);
  for (double x : g.wp) EXPECT_EQ(x, 0.0);
}

TEST(BatchGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 8), hash(4, 32), bsz(2, 4), hard(0, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = oracle::random_model(rng, dim(rng), hash(rng), 1.0);
    const auto batch = oracle::random_batch(rng, bsz(rng), hard(rng));
    const auto g = batch_gradients(model, batch);
    const auto fq = oracle::finite_difference(model, batch, Tower::question);
    const auto fp = oracle::finite_difference(model, batch, Tower::passage);
    for (std::size_t i = 0; i < fq.size(); ++i) worst = std::max(worst, oracle::gradient_error(g.wq[i], fq[i]));
    for (std::size_t i = 0; i < fp.size(); ++i) worst = std::max(worst, oracle::gradient_error(g.wp[i], fp[i]));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Optimizer, ZeroLearningRateIsExactNoOp) {
  std::mt19937_64 rng(8);
  const auto batch = oracle::random_batch(rng, 3, 1);
  for (auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
    auto m = EncoderModel<float>::random(4, 32, 5);
    const auto before = m;
    Optimizer<float> opt(kind, 0.0, 4 * 32);
    for (int s = 0; s < 3; ++s) opt.step(m, batch_gradients(m, batch));
    EXPECT_EQ(m, before);
  }
}

TEST(Optimizer, SgdStepDecreasesLoss) {
  std::mt19937_64 rng(9);
  const auto batch = oracle::random_batch(rng, 4, 1);
  auto m = oracle::random_model(rng, 6, 32, 0.5);
  const double before = batch_loss(m, batch).loss;
  Optimizer<double> opt(OptimizerKind::sgd, 0.05, 6 * 32);
  opt.step(m, batch_gradients(m, batch));
  EXPECT_LT(batch_loss(m, batch).loss, before);
}

TEST(ModelFile, RoundTripAndErrors) {
  const auto m = EncoderModel<float>::random(3, 10, 77);
  const auto bytes = serialize_model(m);
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 4 + 2 * 3 * 10 * 4 + 8u);
  EXPECT_EQ(deserialize_model(bytes), m);
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 1)), CorruptIndex);
  auto bad = bytes;
  bad[20] ^= 1;
  EXPECT_THROW(deserialize_model(bad), CorruptIndex);
  auto ver = serialize_model(m);
  ver[4] = 2;
  ver.resize(ver.size() - 8);
  io::ByteWriter w;
  w.put_bytes(ver);
  w.put(io::fnv1a64(ver));
  EXPECT_THROW(deserialize_model(w.bytes()), UnsupportedVersion);
  const auto path = std::filesystem::temp_directory_path() / "dpr_model_rt.bin";
  save_model(m, path);
  EXPECT_EQ(load_model(path), m);
}
