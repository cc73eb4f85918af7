#pragma once

// Two-tower encoder over feature-hashed bag-of-words inputs, the dot-product
// similarity, and the in-batch-negative softmax NLL with exact gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpr/corpus.hpp"
#include "dpr/dataset.hpp"
#include "dpr/error.hpp"
#include "dpr/io.hpp"
#include "dpr/lexical.hpp"

namespace dpr {

// Sorted bucket indices with their (L2-normalised) weights.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const noexcept { return index.size(); }
  bool empty() const noexcept { return index.empty(); }
  bool operator==(const SparseVector&) const = default;
};

inline std::uint32_t feature_bucket(std::string_view token, std::size_t hash_dim) {
  return static_cast<std::uint32_t>(io::fnv1a64(token) % hash_dim);
}

inline SparseVector featurize(std::string_view text, std::size_t hash_dim) {
  if (hash_dim == 0) throw InvalidArgument("hash_dim must be >= 1");
  std::unordered_map<std::uint32_t, double> counts;
  for (const auto& tok : tokenize(text)) counts[feature_bucket(tok, hash_dim)] += 1.0;

  SparseVector v;
  v.index.reserve(counts.size());
  for (const auto& kv : counts) v.index.push_back(kv.first);
  std::sort(v.index.begin(), v.index.end());
  double sq = 0.0;
  for (auto i : v.index) sq += counts[i] * counts[i];
  const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
  v.value.reserve(v.index.size());
  for (auto i : v.index) v.value.push_back(counts[i] * inv);
  return v;
}

template <typename Real>
using BasicEmbedding = std::vector<Real>;
using Embedding = BasicEmbedding<float>;

// Dot product accumulated in double.
template <typename A, typename B>
double sim(std::span<const A> q, std::span<const B> p) {
  if (q.size() != p.size()) throw DimensionError(q.size(), p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) acc += static_cast<double>(q[i]) * static_cast<double>(p[i]);
  return acc;
}

template <typename A, typename B>
double sim(const std::vector<A>& q, const std::vector<B>& p) {
  return sim(std::span<const A>(q), std::span<const B>(p));
}

enum class Tower { question, passage };

// Independent linear towers W_q, W_p, each dim x hash_dim, row-major.
template <typename Real = float>
class EncoderModel {
 public:
  EncoderModel() = default;

  EncoderModel(std::size_t dim, std::size_t hash_dim)
      : dim_(dim), hash_dim_(hash_dim), wq_(dim * hash_dim, Real{0}), wp_(dim * hash_dim, Real{0}) {
    if (dim == 0 || hash_dim == 0) throw InvalidArgument("encoder dimensions must be >= 1");
  }

  // Entries uniform in (-1/sqrt(hash_dim), 1/sqrt(hash_dim)); W_q drawn before W_p.
  static EncoderModel random(std::size_t dim, std::size_t hash_dim, std::uint64_t seed) {
    EncoderModel m(dim, hash_dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hash_dim));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& w : m.wq_) w = static_cast<Real>(u(rng));
    for (auto& w : m.wp_) w = static_cast<Real>(u(rng));
    return m;
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t hash_dim() const noexcept { return hash_dim_; }
  std::size_t parameter_count() const noexcept { return wq_.size() + wp_.size(); }

  std::vector<Real>& weights(Tower t) noexcept { return t == Tower::question ? wq_ : wp_; }
  const std::vector<Real>& weights(Tower t) const noexcept { return t == Tower::question ? wq_ : wp_; }

  Real& at(Tower t, std::size_t row, std::size_t col) { return weights(t)[row * hash_dim_ + col]; }

  // W x for a sparse x, accumulated in double.
  std::vector<double> project(Tower t, const SparseVector& x) const {
    const auto& w = weights(t);
    std::vector<double> out(dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r) {
      const Real* row = w.data() + r * hash_dim_;
      double acc = 0.0;
      for (std::size_t k = 0; k < x.nnz(); ++k) acc += static_cast<double>(row[x.index[k]]) * x.value[k];
      out[r] = acc;
    }
    return out;
  }

  BasicEmbedding<Real> embed(Tower t, const SparseVector& x) const {
    const auto p = project(t, x);
    return BasicEmbedding<Real>(p.begin(), p.end());
  }

  BasicEmbedding<Real> encode_question(std::string_view question) const {
    return embed(Tower::question, featurize(question, hash_dim_));
  }

  // `rendered` is the title-prefixed encoder input of a passage.
  BasicEmbedding<Real> encode_passage(std::string_view rendered) const {
    return embed(Tower::passage, featurize(rendered, hash_dim_));
  }

  BasicEmbedding<Real> encode_passage(const Passage& p) const { return encode_passage(render_encoder_input(p)); }

  template <typename Other>
  EncoderModel<Other> cast() const {
    EncoderModel<Other> m(dim_, hash_dim_);
    std::transform(wq_.begin(), wq_.end(), m.weights(Tower::question).begin(),
                   [](Real v) { return static_cast<Other>(v); });
    std::transform(wp_.begin(), wp_.end(), m.weights(Tower::passage).begin(),
                   [](Real v) { return static_cast<Other>(v); });
    return m;
  }

  bool operator==(const EncoderModel&) const = default;

 private:
  std::size_t dim_ = 0;
  std::size_t hash_dim_ = 0;
  std::vector<Real> wq_;
  std::vector<Real> wp_;
};

// ---------------------------------------------------------------------------
// Model file: "DRMD", u32 version, u32 dim, u32 hash_dim, W_q, W_p as f32 LE
// row-major, u64 checksum of everything before it.

inline constexpr std::string_view kModelMagic = "DRMD";
inline constexpr std::uint32_t kModelVersion = 1;

template <typename Real>
std::string serialize_model(const EncoderModel<Real>& m) {
  io::ByteWriter w;
  w.put_bytes(kModelMagic);
  w.put(kModelVersion);
  w.put(static_cast<std::uint32_t>(m.dim()));
  w.put(static_cast<std::uint32_t>(m.hash_dim()));
  for (auto v : m.weights(Tower::question)) w.put(static_cast<float>(v));
  for (auto v : m.weights(Tower::passage)) w.put(static_cast<float>(v));
  w.put(io::fnv1a64(w.bytes()));
  return w.bytes();
}

inline EncoderModel<float> deserialize_model(std::string_view bytes) {
  if (bytes.size() < kModelMagic.size() + 12 + 8 || bytes.substr(0, kModelMagic.size()) != kModelMagic)
    throw CorruptIndex("not a model file (bad magic)");
  const auto body = bytes.substr(0, bytes.size() - 8);
  io::ByteReader<CorruptIndex> tail(bytes.substr(bytes.size() - 8));
  if (tail.get<std::uint64_t>() != io::fnv1a64(body)) throw CorruptIndex("model checksum mismatch");
  io::ByteReader<CorruptIndex> r(body);
  r.get_bytes(kModelMagic.size());
  if (const auto v = r.get<std::uint32_t>(); v != kModelVersion) throw UnsupportedVersion(kModelVersion, v);
  const auto dim = r.get<std::uint32_t>();
  const auto hash_dim = r.get<std::uint32_t>();
  if (r.remaining() != 2ULL * dim * hash_dim * sizeof(float)) throw CorruptIndex("model size does not match header");
  EncoderModel<float> m(dim, hash_dim);
  for (auto& v : m.weights(Tower::question)) v = r.get<float>();
  for (auto& v : m.weights(Tower::passage)) v = r.get<float>();
  return m;
}

template <typename Real>
void save_model(const EncoderModel<Real>& m, const std::filesystem::path& path) {
  io::write_file(path, serialize_model(m));
}

inline EncoderModel<float> load_model(const std::filesystem::path& path) {
  return deserialize_model(io::read_file(path));
}

// ---------------------------------------------------------------------------
// Loss.

inline double logsumexp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

// -log softmax of the positive among {positive} + negatives. The largest term is pulled out
// of the sum so a confident positive keeps full precision through log1p.
inline double nll_loss(double sim_positive, std::span<const double> sim_negatives) {
  double mx = sim_positive;
  std::size_t arg = sim_negatives.size();  // sentinel: positive is the max
  for (std::size_t i = 0; i < sim_negatives.size(); ++i) {
    if (sim_negatives[i] > mx) {
      mx = sim_negatives[i];
      arg = i;
    }
  }
  if (!std::isfinite(mx)) return mx > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  double rest = arg == sim_negatives.size() ? 0.0 : std::exp(sim_positive - mx);
  for (std::size_t i = 0; i < sim_negatives.size(); ++i) {
    if (i != arg) rest += std::exp(sim_negatives[i] - mx);
  }
  return std::max(0.0, (mx - sim_positive) + std::log1p(rest));
}

inline double nll_loss(double sim_positive, const std::vector<double>& sim_negatives) {
  return nll_loss(sim_positive, std::span<const double>(sim_negatives));
}

// Featurised training instance; negatives are hard negatives followed by random ones.
struct EncodedInstance {
  SparseVector question;
  SparseVector positive;
  std::vector<SparseVector> negatives;
  std::string positive_id;
  std::vector<std::string> negative_ids;
};

inline EncodedInstance encode_instance(const TrainingInstance& inst, std::size_t hash_dim,
                                       std::string_view separator = kDefaultSeparator) {
  EncodedInstance e;
  e.question = featurize(inst.question.text, hash_dim);
  e.positive = featurize(render_encoder_input(inst.positive, separator), hash_dim);
  e.positive_id = inst.positive.passage_id;
  for (const auto* list : {&inst.hard_negatives, &inst.random_negatives}) {
    for (const auto& p : *list) {
      e.negatives.push_back(featurize(render_encoder_input(p, separator), hash_dim));
      e.negative_ids.push_back(p.passage_id);
    }
  }
  return e;
}

inline std::vector<EncodedInstance> encode_instances(const std::vector<TrainingInstance>& instances,
                                                     std::size_t hash_dim) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(encode_instance(inst, hash_dim));
  return out;
}

struct BatchLossReport {
  double loss = 0.0;
  std::vector<std::size_t> per_question_rank_of_positive;  // 1 = best
  std::size_t duplicate_candidates = 0;  // candidates sharing a passage id with an earlier one
};

template <typename Real>
struct Gradients {
  std::vector<double> wq;
  std::vector<double> wp;
};

namespace detail {

// Candidate layout: all B positives in batch order, then each instance's negatives in batch order.
struct BatchCandidates {
  std::vector<const SparseVector*> features;
  std::vector<const std::string*> ids;
};

inline BatchCandidates collect_candidates(std::span<const EncodedInstance* const> batch) {
  BatchCandidates c;
  for (const auto* inst : batch) {
    c.features.push_back(&inst->positive);
    c.ids.push_back(&inst->positive_id);
  }
  for (const auto* inst : batch) {
    for (std::size_t j = 0; j < inst->negatives.size(); ++j) {
      c.features.push_back(&inst->negatives[j]);
      c.ids.push_back(&inst->negative_ids[j]);
    }
  }
  return c;
}

template <typename Real>
struct BatchForward {
  std::size_t batch = 0;
  std::size_t candidates = 0;
  std::vector<std::vector<double>> q_emb;
  std::vector<std::vector<double>> p_emb;
  std::vector<double> scores;  // batch x candidates
  BatchCandidates cands;
};

template <typename Real>
BatchForward<Real> forward(const EncoderModel<Real>& model, std::span<const EncodedInstance* const> batch) {
  if (batch.size() < 2) throw InvalidArgument("in-batch negatives need a batch of at least 2 questions");
  BatchForward<Real> f;
  f.batch = batch.size();
  f.cands = collect_candidates(batch);
  f.candidates = f.cands.features.size();
  for (const auto* inst : batch) f.q_emb.push_back(model.project(Tower::question, inst->question));
  for (const auto* x : f.cands.features) f.p_emb.push_back(model.project(Tower::passage, *x));
  f.scores.resize(f.batch * f.candidates);
  for (std::size_t i = 0; i < f.batch; ++i) {
    for (std::size_t j = 0; j < f.candidates; ++j) {
      f.scores[i * f.candidates + j] = sim(std::span<const double>(f.q_emb[i]), std::span<const double>(f.p_emb[j]));
    }
  }
  return f;
}

}  // namespace detail

// Softmax over one question's candidate scores.
inline std::vector<double> softmax(std::span<const double> xs) {
  const double lse = logsumexp(xs);
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = std::exp(xs[i] - lse);
  return out;
}

template <typename Real>
BatchLossReport batch_loss(const EncoderModel<Real>& model, std::span<const EncodedInstance* const> batch) {
  const auto f = detail::forward(model, batch);
  BatchLossReport rep;
  {
    std::unordered_set<std::string_view> ids;
    for (const auto* id : f.cands.ids) {
      if (!ids.insert(*id).second) ++rep.duplicate_candidates;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < f.batch; ++i) {
    std::span<const double> row(f.scores.data() + i * f.candidates, f.candidates);
    const double pos = row[i];
    std::vector<double> neg;
    neg.reserve(f.candidates - 1);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < f.candidates; ++j) {
      if (j == i) continue;
      neg.push_back(row[j]);
      if (row[j] > pos) ++rank;
    }
    total += nll_loss(pos, neg);
    rep.per_question_rank_of_positive.push_back(rank);
  }
  rep.loss = total / static_cast<double>(f.batch);
  return rep;
}

// d loss / d W for the mean batch loss. With G = (softmax(S) - I_pos) / B:
// dQ_i = sum_j G_ij P_j, dP_j = sum_i G_ij Q_i, dW_q = sum_i dQ_i x_i^T, dW_p = sum_j dP_j y_j^T.
template <typename Real>
Gradients<Real> batch_gradients(const EncoderModel<Real>& model, std::span<const EncodedInstance* const> batch,
                                BatchLossReport* report = nullptr) {
  const auto f = detail::forward(model, batch);
  const std::size_t d = model.dim();
  const std::size_t h = model.hash_dim();
  const double inv_b = 1.0 / static_cast<double>(f.batch);

  std::vector<double> g(f.batch * f.candidates);
  double total = 0.0;
  if (report) report->per_question_rank_of_positive.clear();
  for (std::size_t i = 0; i < f.batch; ++i) {
    std::span<const double> row(f.scores.data() + i * f.candidates, f.candidates);
    const auto prob = softmax(row);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < f.candidates; ++j) {
      g[i * f.candidates + j] = (prob[j] - (j == i ? 1.0 : 0.0)) * inv_b;
      if (j != i && row[j] > row[i]) ++rank;
    }
    if (report) {
      std::vector<double> neg;
      for (std::size_t j = 0; j < f.candidates; ++j) {
        if (j != i) neg.push_back(row[j]);
      }
      total += nll_loss(row[i], neg);
      report->per_question_rank_of_positive.push_back(rank);
    }
  }
  if (report) report->loss = total * inv_b;

  Gradients<Real> grads{std::vector<double>(d * h, 0.0), std::vector<double>(d * h, 0.0)};
  std::vector<double> dv(d);
  for (std::size_t i = 0; i < f.batch; ++i) {
    std::fill(dv.begin(), dv.end(), 0.0);
    for (std::size_t j = 0; j < f.candidates; ++j) {
      const double gij = g[i * f.candidates + j];
      for (std::size_t r = 0; r < d; ++r) dv[r] += gij * f.p_emb[j][r];
    }
    const auto& x = batch[i]->question;
    for (std::size_t r = 0; r < d; ++r) {
      double* row = grads.wq.data() + r * h;
      for (std::size_t k = 0; k < x.nnz(); ++k) row[x.index[k]] += dv[r] * x.value[k];
    }
  }
  for (std::size_t j = 0; j < f.candidates; ++j) {
    std::fill(dv.begin(), dv.end(), 0.0);
    for (std::size_t i = 0; i < f.batch; ++i) {
      const double gij = g[i * f.candidates + j];
      for (std::size_t r = 0; r < d; ++r) dv[r] += gij * f.q_emb[i][r];
    }
    const auto& y = *f.cands.features[j];
    for (std::size_t r = 0; r < d; ++r) {
      double* row = grads.wp.data() + r * h;
      for (std::size_t k = 0; k < y.nnz(); ++k) row[y.index[k]] += dv[r] * y.value[k];
    }
  }
  return grads;
}

template <typename Real>
BatchLossReport batch_loss(const EncoderModel<Real>& model, const std::vector<TrainingInstance>& batch) {
  const auto enc = encode_instances(batch, model.hash_dim());
  std::vector<const EncodedInstance*> ptrs;
  for (const auto& e : enc) ptrs.push_back(&e);
  return batch_loss(model, std::span<const EncodedInstance* const>(ptrs));
}

template <typename Real>
Gradients<Real> batch_gradients(const EncoderModel<Real>& model, const std::vector<TrainingInstance>& batch) {
  const auto enc = encode_instances(batch, model.hash_dim());
  std::vector<const EncodedInstance*> ptrs;
  for (const auto& e : enc) ptrs.push_back(&e);
  return batch_gradients(model, std::span<const EncodedInstance* const>(ptrs));
}

// ---------------------------------------------------------------------------
// Optimisers.

enum class OptimizerKind { sgd, adam };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline OptimizerKind optimizer_from_string(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw InvalidArgument("unknown optimizer: " + std::string(s));
}

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Real>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, std::size_t params_per_tower, AdamParams adam = {})
      : kind_(kind), lr_(lr), adam_(adam) {
    if (kind_ == OptimizerKind::adam) {
      for (auto* s : {&mq_, &vq_, &mp_, &vp_}) s->assign(params_per_tower, 0.0);
    }
  }

  void step(EncoderModel<Real>& model, const Gradients<Real>& g) {
    ++t_;
    update(model.weights(Tower::question), g.wq, mq_, vq_);
    update(model.weights(Tower::passage), g.wp, mp_, vp_);
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  void update(std::vector<Real>& w, const std::vector<double>& g, std::vector<double>& m, std::vector<double>& v) {
    if (kind_ == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<Real>(w[i] - lr_ * g[i]);
      return;
    }
    const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = adam_.beta1 * m[i] + (1.0 - adam_.beta1) * g[i];
      v[i] = adam_.beta2 * v[i] + (1.0 - adam_.beta2) * g[i] * g[i];
      const double step = lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_.eps);
      w[i] = static_cast<Real>(w[i] - step);
    }
  }

  OptimizerKind kind_;
  double lr_;
  AdamParams adam_;
  std::size_t t_ = 0;
  std::vector<double> mq_, vq_, mp_, vp_;
};

}  // namespace dpr
