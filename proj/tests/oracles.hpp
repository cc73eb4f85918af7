#pragma once

// Independent reference computations used only by tests. None of these call the
// code paths they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dpr/dpr.hpp"

namespace oracle {

// exp-form softmax NLL without any max shift.
inline double naive_nll(double pos, const std::vector<double>& neg) {
  double denom = std::exp(pos);
  for (double n : neg) denom += std::exp(n);
  return -std::log(std::exp(pos) / denom);
}

// BM25 straight from the definition over raw token lists.
inline std::vector<double> bm25_scores(const std::vector<std::vector<std::string>>& docs,
                                       const std::vector<std::string>& query, double k1 = 1.2, double b = 0.75) {
  const double n = static_cast<double>(docs.size());
  double avgdl = 0.0;
  for (const auto& d : docs) avgdl += static_cast<double>(d.size());
  avgdl /= n;
  std::map<std::string, double> df;
  for (const auto& d : docs) {
    std::vector<std::string> uniq(d);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (const auto& t : uniq) df[t] += 1.0;
  }
  std::vector<double> out(docs.size(), 0.0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& q : query) {
      const double tf = static_cast<double>(std::count(docs[i].begin(), docs[i].end(), q));
      if (tf == 0.0) continue;
      const double idf = std::log((n - df[q] + 0.5) / (df[q] + 0.5) + 1.0);
      const double dl = static_cast<double>(docs[i].size());
      out[i] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
  }
  return out;
}

struct Ranked {
  std::size_t ordinal;
  double score;
};

// Full scan, full sort: score descending, ordinal ascending.
inline std::vector<Ranked> mips_scan(const std::vector<float>& rows, std::size_t dim, const std::vector<float>& q,
                                     std::size_t k) {
  const std::size_t m = rows.size() / dim;
  std::vector<Ranked> all;
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) s += static_cast<double>(q[c]) * static_cast<double>(rows[i * dim + c]);
    all.push_back({i, s});
  }
  std::stable_sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
  all.resize(std::min(k, all.size()));
  return all;
}

// In-batch loss evaluated in long double straight from the definition: candidates are every
// positive in the batch followed by each question's hard then random negatives.
inline long double batch_loss_ld(const dpr::EncoderModel<double>& model,
                                 const std::vector<dpr::TrainingInstance>& batch) {
  const std::size_t d = model.dim(), h = model.hash_dim();
  auto embed = [&](dpr::Tower t, const std::string& text) {
    const auto x = dpr::featurize(text, h);
    const auto& w = model.weights(t);
    std::vector<long double> e(d, 0.0L);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t k = 0; k < x.nnz(); ++k) {
        e[r] += static_cast<long double>(w[r * h + x.index[k]]) * static_cast<long double>(x.value[k]);
      }
    }
    return e;
  };
  std::vector<std::vector<long double>> cands;
  for (const auto& inst : batch) cands.push_back(embed(dpr::Tower::passage, dpr::render_encoder_input(inst.positive)));
  for (const auto& inst : batch) {
    for (const auto& p : inst.hard_negatives) cands.push_back(embed(dpr::Tower::passage, dpr::render_encoder_input(p)));
    for (const auto& p : inst.random_negatives) cands.push_back(embed(dpr::Tower::passage, dpr::render_encoder_input(p)));
  }
  long double total = 0.0L;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto q = embed(dpr::Tower::question, batch[i].question.text);
    std::vector<long double> s;
    for (const auto& c : cands) {
      long double dot = 0.0L;
      for (std::size_t r = 0; r < d; ++r) dot += q[r] * c[r];
      s.push_back(dot);
    }
    const long double mx = *std::max_element(s.begin(), s.end());
    long double z = 0.0L;
    for (long double v : s) z += std::exp(v - mx);
    total += mx + std::log(z) - s[i];
  }
  return total / static_cast<long double>(batch.size());
}

// Central differences of the long double loss.
inline std::vector<double> finite_difference(dpr::EncoderModel<double> model,
                                             const std::vector<dpr::TrainingInstance>& batch, dpr::Tower tower,
                                             double eps = 1e-4) {
  auto& w = model.weights(tower);
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double orig = w[i];
    w[i] = orig + eps;
    const long double up = batch_loss_ld(model, batch);
    w[i] = orig - eps;
    const long double down = batch_loss_ld(model, batch);
    w[i] = orig;
    out[i] = static_cast<double>((up - down) / (2.0L * eps));
  }
  return out;
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Relative error for gradient coordinates. Coordinates whose true value is zero (a feature
// shared by candidates that cancels) leave only rounding noise, so the denominator is floored.
inline double gradient_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Random small training batch over a tiny vocabulary so hash buckets collide.
inline std::vector<dpr::TrainingInstance> random_batch(std::mt19937_64& rng, std::size_t batch, std::size_t hard) {
  static const std::vector<std::string> vocab{"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta",
                                              "iota", "kappa", "lambda", "mu", "nu", "xi", "omicron", "pi"};
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1), len(1, 6);
  auto sentence = [&] {
    std::string s;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) s += (i ? " " : "") + vocab[word(rng)];
    return s;
  };
  std::vector<dpr::TrainingInstance> out;
  for (std::size_t i = 0; i < batch; ++i) {
    dpr::TrainingInstance inst;
    inst.question = dpr::Question{"q" + std::to_string(i), sentence(), dpr::QuestionType::factoid, {"x"}, {}};
    inst.positive = dpr::Passage{"p" + std::to_string(i) + "#0", "p" + std::to_string(i), "t", sentence(), 0};
    for (std::size_t h = 0; h < hard; ++h) {
      inst.hard_negatives.push_back(dpr::Passage{"h" + std::to_string(i) + "_" + std::to_string(h) + "#0", "h",
                                                 sentence(), sentence(), 0});
    }
    out.push_back(std::move(inst));
  }
  return out;
}

inline dpr::EncoderModel<double> random_model(std::mt19937_64& rng, std::size_t dim, std::size_t hash_dim,
                                              double scale) {
  dpr::EncoderModel<double> m(dim, hash_dim);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto t : {dpr::Tower::question, dpr::Tower::passage}) {
    for (auto& w : m.weights(t)) w = u(rng);
  }
  return m;
}

}  // namespace oracle
