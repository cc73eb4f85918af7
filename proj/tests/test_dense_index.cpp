#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "dpr/dense_index.hpp"
#include "oracles.hpp"

using namespace dpr;

namespace {

FlatIndex random_index(std::mt19937_64& rng, std::size_t m, std::size_t d) {
  std::normal_distribution<float> n;
  std::vector<float> v(m * d);
  for (auto& x : v) x = n(rng);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < m; ++i) ids.push_back("p" + std::to_string(i));
  return FlatIndex(d, std::move(v), std::move(ids));
}

std::vector<float> random_query(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<float> n;
  std::vector<float> q(d);
  for (auto& x : q) x = n(rng);
  return q;
}

std::vector<std::size_t> ordinals(const RetrievalResult& r) {
  std::vector<std::size_t> out;
  for (const auto& h : r.hits) out.push_back(h.ordinal);
  return out;
}

}  // namespace

TEST(FlatIndex, OrthogonalRows) {
  FlatIndex idx(2, {1, 0, 0, 1}, {"a", "b"});
  const auto r = idx.search(Embedding{1, 0}, 1);
  ASSERT_EQ(r.hits.size(), 1u);
  EXPECT_EQ(r.hits[0].passage_id, "a");
  EXPECT_EQ(r.hits[0].score, 1.0);
  EXPECT_EQ(r.hits[0].rank, 1u);
}

TEST(FlatIndex, KLargerThanSizeReturnsAll) {
  FlatIndex idx(2, {1, 0, 0, 1, 1, 1}, {"a", "b", "c"});
  const auto r = idx.search(Embedding{0.5f, 2.0f}, 10);
  ASSERT_EQ(r.hits.size(), 3u);
  EXPECT_EQ(r.hits[0].passage_id, "c");
  EXPECT_EQ(r.hits[1].passage_id, "b");
  EXPECT_EQ(r.hits[2].passage_id, "a");
}

TEST(FlatIndex, ZeroQueryTiesInRowOrder) {
  std::mt19937_64 rng(1);
  const auto idx = random_index(rng, 50, 4);
  const auto r = idx.search(Embedding(4, 0.0f), 7);
  ASSERT_EQ(r.hits.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(r.hits[i].ordinal, i);
    EXPECT_EQ(r.hits[i].score, 0.0);
  }
}

TEST(FlatIndex, RejectsBadQueries) {
  FlatIndex idx(3, {1, 2, 3}, {"a"});
  EXPECT_THROW(idx.search(Embedding{1, 2}, 1), DimensionError);
  EXPECT_THROW(idx.search(Embedding{1, 2, 3}, 0), InvalidArgument);
  EXPECT_THROW(FlatIndex(3, {1, 2}, {"a"}), InvalidArgument);
  EXPECT_THROW(FlatIndex(1, {1, 2}, {"a", "a"}), DuplicateId);
  EXPECT_THROW(FlatIndex(1, {std::numeric_limits<float>::quiet_NaN()}, {"a"}), InvalidArgument);
}

TEST(FlatIndex, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> msz(1, 600), dsz(1, 24), ksz(1, 80);
  for (int t = 0; t < 60; ++t) {
    const std::size_t m = msz(rng), d = dsz(rng), k = ksz(rng);
    const auto idx = random_index(rng, m, d);
    const auto q = random_query(rng, d);
    const auto ref = oracle::mips_scan(idx.vectors(), d, q, k);
    for (SearchOptions opts : {SearchOptions{256, 1}, SearchOptions{1, 1}, SearchOptions{7, 3}, SearchOptions{64, 4}}) {
      const auto got = idx.search(q, k, opts);
      ASSERT_EQ(got.hits.size(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_EQ(got.hits[i].ordinal, ref[i].ordinal);
        EXPECT_EQ(got.hits[i].score, ref[i].score);
        EXPECT_EQ(got.hits[i].rank, i + 1);
      }
    }
    EXPECT_EQ(ordinals(idx.search(q, k)), ordinals(idx.search_naive(q, k)));
  }
}

TEST(FlatIndex, DuplicateRowsTieByOrdinal) {
  FlatIndex idx(2, {1, 1, 0, 1, 1, 1, 1, 1}, {"a", "b", "c", "d"});
  const auto r = idx.search(Embedding{1, 1}, 3, SearchOptions{1, 2});
  EXPECT_EQ(ordinals(r), (std::vector<std::size_t>{0, 2, 3}));
}

TEST(FlatIndex, PrefixConsistentAndScoresAreSim) {
  std::mt19937_64 rng(5);
  const auto idx = random_index(rng, 300, 16);
  const auto q = random_query(rng, 16);
  const auto big = idx.search(q, 50);
  for (std::size_t k : {1u, 5u, 10u, 49u}) {
    const auto small = idx.search(q, k);
    for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(small.hits[i].ordinal, big.hits[i].ordinal);
  }
  for (const auto& h : big.hits) EXPECT_EQ(h.score, sim(std::span<const float>(q), idx.row(h.ordinal)));
  for (std::size_t i = 1; i < big.hits.size(); ++i) EXPECT_GE(big.hits[i - 1].score, big.hits[i].score);
}

TEST(BuildDenseIndex, ShapeAndDeterminism) {
  std::vector<Passage> ps;
  for (int i = 0; i < 37; ++i) ps.push_back(Passage{"d" + std::to_string(i) + "#0", "d" + std::to_string(i), "T",
                                                   "word" + std::to_string(i) + " shared text", 0});
  PassageStore store(ps, 100, "x");
  const auto model = EncoderModel<float>::random(6, 128, 9);
  const auto a = build_dense_index(model, store);
  EXPECT_EQ(a.size(), 37u);
  EXPECT_EQ(a.dim(), 6u);
  EXPECT_EQ(a.ids()[5], "d5#0");
  EXPECT_EQ(a, build_dense_index(model, store, 4, 3));
  const auto e = model.encode_passage(store[12]);
  for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(a.row(12)[c], e[c]);
  EXPECT_THROW(build_dense_index(model, PassageStore({}, 100, "x")), EmptyCorpus);
}

TEST(DenseIndexFile, RoundTrip) {
  std::mt19937_64 rng(6);
  const auto idx = random_index(rng, 25, 5);
  const auto bytes = idx.serialize();
  EXPECT_EQ(bytes.substr(0, 4), "DRIX");
  EXPECT_EQ(FlatIndex::deserialize(bytes), idx);
  const auto path = std::filesystem::temp_directory_path() / "dpr_dense_rt.bin";
  save_index(idx, path);
  const auto loaded = load_dense_index(path);
  const auto q = random_query(rng, 5);
  EXPECT_EQ(ordinals(loaded.search(q, 10)), ordinals(idx.search(q, 10)));
}

TEST(DenseIndexFile, CorruptionDetected) {
  std::mt19937_64 rng(7);
  const auto bytes = random_index(rng, 10, 3).serialize();
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(FlatIndex::deserialize(bytes.substr(0, cut)), CorruptIndex) << cut;
  }
  auto flipped = bytes;
  flipped[flipped.size() - 20] ^= 0x40;
  EXPECT_THROW(FlatIndex::deserialize(flipped), CorruptIndex);
}

TEST(DenseIndexFile, VersionMismatchNamesBothVersions) {
  std::mt19937_64 rng(8);
  auto bytes = random_index(rng, 2, 2).serialize();
  bytes[4] = 9;
  try {
    FlatIndex::deserialize(bytes);
    FAIL() << "expected UnsupportedVersion";
  } catch (const UnsupportedVersion& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('1'), std::string::npos) << msg;
    EXPECT_NE(msg.find('9'), std::string::npos) << msg;
  }
}
