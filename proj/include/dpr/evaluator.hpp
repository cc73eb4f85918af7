#pragma once

// Top-k retrieval accuracy (hit@k) and micro-averaged set precision/recall/F1.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dpr/corpus.hpp"
#include "dpr/dataset.hpp"
#include "dpr/dense_index.hpp"
#include "dpr/encoder.hpp"
#include "dpr/error.hpp"
#include "dpr/io.hpp"
#include "dpr/lexical.hpp"
#include "dpr/types.hpp"

namespace dpr {

enum class MatchMode { answer_string, gold_passage_id };

inline std::string_view to_string(MatchMode m) {
  return m == MatchMode::answer_string ? "answer_string" : "gold_passage_id";
}

inline MatchMode match_mode_from_string(std::string_view s) {
  if (s == "answer_string") return MatchMode::answer_string;
  if (s == "gold_passage_id") return MatchMode::gold_passage_id;
  throw InvalidArgument("unknown match mode: " + std::string(s));
}

struct EvalConfig {
  std::vector<std::size_t> k_values{1, 5, 10};
  MatchMode match_mode = MatchMode::answer_string;

  void validate() const {
    if (k_values.empty()) throw InvalidArgument("k_values must not be empty");
    for (std::size_t i = 0; i < k_values.size(); ++i) {
      if (k_values[i] == 0) throw InvalidArgument("k values must be >= 1");
      if (i > 0 && k_values[i] <= k_values[i - 1]) throw InvalidArgument("k values must be strictly ascending");
    }
  }
};

struct EvalQuery {
  Question question;
  std::vector<std::string> gold_ids;
};

inline std::vector<EvalQuery> eval_queries(const std::vector<TrainingInstance>& instances) {
  std::vector<EvalQuery> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(EvalQuery{inst.question, {inst.positive.passage_id}});
  return out;
}

// Whether the first `k` hits answer the question. `store` is only consulted in
// answer_string mode.
inline bool judge_hit(const RetrievalResult& result, const EvalQuery& q, const PassageStore* store, MatchMode mode,
                      std::size_t k = static_cast<std::size_t>(-1)) {
  const std::size_t n = std::min(k, result.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = result.hits[i].passage_id;
    if (mode == MatchMode::gold_passage_id) {
      if (std::find(q.gold_ids.begin(), q.gold_ids.end(), id) != q.gold_ids.end()) return true;
    } else {
      if (!store) throw InvalidArgument("answer_string judging needs the passage store");
      if (contains_answer(store->by_id(id).text, q.question)) return true;
    }
  }
  return false;
}

struct MetricsAtK {
  double hit_rate = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const MetricsAtK&) const = default;
};

struct ReportLabel {
  std::string encoder = "hashed-bow";
  std::size_t epochs = 0;
  std::size_t batch = 0;

  bool operator==(const ReportLabel&) const = default;
};

struct EvalReport {
  std::map<std::size_t, MetricsAtK> per_k;
  std::size_t n_questions = 0;
  MatchMode match_mode = MatchMode::answer_string;
  ReportLabel label;

  void validate() const {
    if (per_k.empty()) throw InvalidArgument("evaluation report has no k entries");
    double prev = -1.0;
    for (const auto& [k, m] : per_k) {
      for (double v : {m.hit_rate, m.precision, m.recall, m.f1}) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("rate outside [0, 1] at k=" + std::to_string(k));
      }
      if (m.hit_rate < prev) throw InvalidArgument("hit rate decreases at k=" + std::to_string(k));
      prev = m.hit_rate;
    }
  }

  bool operator==(const EvalReport&) const = default;
};

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// Aggregates precomputed rankings (one per query, in query order).
inline EvalReport evaluate_rankings(const std::vector<RetrievalResult>& rankings, const std::vector<EvalQuery>& queries,
                                    const PassageStore* store, const EvalConfig& cfg) {
  cfg.validate();
  if (queries.empty()) throw EmptyEvaluation();
  if (rankings.size() != queries.size()) throw InvalidArgument("one ranking per query required");

  EvalReport rep;
  rep.n_questions = queries.size();
  rep.match_mode = cfg.match_mode;
  for (auto k : cfg.k_values) {
    std::size_t hits = 0, inter = 0, retrieved = 0, gold = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto& r = rankings[i];
      const auto& q = queries[i];
      if (judge_hit(r, q, store, cfg.match_mode, k)) ++hits;
      const std::size_t n = std::min(k, r.size());
      std::unordered_set<std::string_view> gold_set(q.gold_ids.begin(), q.gold_ids.end());
      for (std::size_t j = 0; j < n; ++j) inter += gold_set.contains(r.hits[j].passage_id) ? 1 : 0;
      retrieved += n;
      gold += gold_set.size();
    }
    MetricsAtK m;
    m.hit_rate = static_cast<double>(hits) / static_cast<double>(queries.size());
    m.precision = retrieved ? static_cast<double>(inter) / static_cast<double>(retrieved) : 0.0;
    m.recall = gold ? static_cast<double>(inter) / static_cast<double>(gold) : 0.0;
    m.f1 = f1_score(m.precision, m.recall);
    rep.per_k[k] = m;
  }
  rep.validate();
  return rep;
}

template <typename Real>
std::vector<RetrievalResult> dense_rankings(const EncoderModel<Real>& model, const FlatIndex& index,
                                            const std::vector<EvalQuery>& queries, std::size_t k,
                                            const SearchOptions& opts = {}) {
  std::vector<RetrievalResult> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    const auto emb = model.encode_question(q.question.text);
    const Embedding e(emb.begin(), emb.end());
    out.push_back(index.search(e, k, opts));
  }
  return out;
}

template <typename Real>
EvalReport evaluate(const EncoderModel<Real>& model, const FlatIndex& index, const PassageStore* store,
                    const std::vector<EvalQuery>& queries, const EvalConfig& cfg, const SearchOptions& opts = {}) {
  cfg.validate();
  if (queries.empty()) throw EmptyEvaluation();
  if (model.dim() != index.dim()) throw DimensionError(index.dim(), model.dim());
  return evaluate_rankings(dense_rankings(model, index, queries, cfg.k_values.back(), opts), queries, store, cfg);
}

inline EvalReport evaluate_bm25(const InvertedIndex& index, const PassageStore& store,
                                const std::vector<EvalQuery>& queries, const EvalConfig& cfg,
                                const Bm25Params& params = {}) {
  cfg.validate();
  if (queries.empty()) throw EmptyEvaluation();
  std::vector<RetrievalResult> rankings;
  rankings.reserve(queries.size());
  for (const auto& q : queries) rankings.push_back(bm25_top_k(index, q.question.text, cfg.k_values.back(), params));
  return evaluate_rankings(rankings, queries, &store, cfg);
}

// ---------------------------------------------------------------------------
// Report output.

enum class ReportFormat { json, markdown_table };

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n_questions"] = r.n_questions;
  j["match_mode"] = to_string(r.match_mode);
  j["label"] = {{"encoder", r.label.encoder}, {"epochs", r.label.epochs}, {"batch", r.label.batch}};
  nlohmann::ordered_json per_k = nlohmann::ordered_json::object();
  for (const auto& [k, m] : r.per_k) {
    per_k[std::to_string(k)] = {{"hit_rate", m.hit_rate}, {"precision", m.precision}, {"recall", m.recall},
                                {"f1", m.f1}};
  }
  j["per_k"] = std::move(per_k);
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.n_questions = j.at("n_questions").get<std::size_t>();
    r.match_mode = match_mode_from_string(j.at("match_mode").get<std::string>());
    const auto& l = j.at("label");
    r.label = ReportLabel{l.at("encoder").get<std::string>(), l.at("epochs").get<std::size_t>(),
                          l.at("batch").get<std::size_t>()};
    for (const auto& [key, m] : j.at("per_k").items()) {
      r.per_k[std::stoull(key)] = MetricsAtK{m.at("hit_rate").get<double>(), m.at("precision").get<double>(),
                                             m.at("recall").get<double>(), m.at("f1").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
  r.validate();
  return r;
}

inline std::string report_to_markdown(const EvalReport& r) {
  r.validate();
  auto it = r.per_k.find(10);
  if (it == r.per_k.end()) it = std::prev(r.per_k.end());
  char row[256];
  std::snprintf(row, sizeof(row), "| %s | %zu | %zu | %.4f | %.4f |\n", r.label.encoder.c_str(), r.label.epochs,
                r.label.batch, it->second.hit_rate, it->second.f1);
  std::ostringstream os;
  os << "| Encoder | Epochs | Batch | hit@" << it->first << " | F1 |\n";
  os << "|---|---|---|---|---|\n";
  os << row;
  return os.str();
}

inline std::string render_report(const EvalReport& r, ReportFormat fmt) {
  r.validate();
  return fmt == ReportFormat::json ? report_to_json(r).dump(2) + "\n" : report_to_markdown(r);
}

inline void write_report(const EvalReport& r, const std::filesystem::path& path, ReportFormat fmt) {
  io::write_file(path, render_report(r, fmt));
}

inline EvalReport load_report(const std::filesystem::path& path) {
  try {
    return report_from_json(nlohmann::json::parse(io::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace dpr
