#pragma once

// BioASQ-style question parsing, gold-context alignment, negative attachment and
// the DPR training JSON format.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dpr/corpus.hpp"
#include "dpr/error.hpp"
#include "dpr/io.hpp"
#include "dpr/lexical.hpp"
#include "dpr/text.hpp"
#include "dpr/types.hpp"

namespace dpr {

struct ParseReport {
  std::size_t total = 0;
  std::size_t skipped_type = 0;     // list / summary / unknown
  std::size_t skipped_invalid = 0;  // empty text, no answers, yes/no without snippets
};

namespace detail {

inline void flatten_answers(const nlohmann::json& j, std::vector<std::string>& out) {
  if (j.is_string()) {
    auto s = text::collapse_whitespace(j.get<std::string>());
    if (!s.empty()) out.push_back(std::move(s));
  } else if (j.is_array()) {
    for (const auto& e : j) flatten_answers(e, out);
  }
}

}  // namespace detail

// Keeps factoid and yes/no questions only.
inline std::vector<Question> parse_bioasq_json(std::string_view content, ParseReport* report = nullptr) {
  ParseReport rep;
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed BioASQ JSON: ") + e.what());
  }
  const nlohmann::json* items = nullptr;
  if (root.is_object() && root.contains("questions") && root["questions"].is_array()) {
    items = &root["questions"];
  } else if (root.is_array()) {
    items = &root;
  } else {
    throw ParseError("BioASQ JSON must be an object with a \"questions\" array");
  }

  std::vector<Question> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < items->size(); ++i) {
    const auto& item = (*items)[i];
    ++rep.total;
    if (!item.is_object()) throw ParseError("question " + std::to_string(i) + " is not an object");
    const auto type = item.value("type", std::string{});
    if (type != "factoid" && type != "yesno") {
      ++rep.skipped_type;
      continue;
    }
    Question q;
    q.qtype = question_type_from_string(type);
    q.question_id = item.contains("id") && item["id"].is_string() ? item["id"].get<std::string>()
                                                                  : "q" + std::to_string(i);
    q.text = text::collapse_whitespace(item.value("body", std::string{}));
    if (item.contains("exact_answer")) detail::flatten_answers(item["exact_answer"], q.answers);
    if (item.contains("snippets") && item["snippets"].is_array()) {
      for (const auto& s : item["snippets"]) {
        if (s.is_object() && s.contains("text") && s["text"].is_string()) {
          auto t = text::collapse_whitespace(s["text"].get<std::string>());
          if (!t.empty()) q.gold_snippets.push_back(std::move(t));
        }
      }
    }
    if (q.text.empty() || q.answers.empty() || answer_evidence(q).empty()) {
      ++rep.skipped_invalid;
      continue;
    }
    if (!seen.insert(q.question_id).second) throw DuplicateId(q.question_id);
    out.push_back(std::move(q));
  }
  if (report) *report = rep;
  return out;
}

inline std::vector<Question> parse_bioasq(const std::filesystem::path& path, ParseReport* report = nullptr) {
  return parse_bioasq_json(io::read_file(path), report);
}

// Lowercased, whitespace-collapsed passage texts for alignment.
inline std::vector<std::string> normalized_texts(const PassageStore& store) {
  std::vector<std::string> out;
  out.reserve(store.size());
  for (const auto& p : store.passages()) out.push_back(text::normalize_for_match(p.text));
  return out;
}

// Lowest-ordinal passage containing a gold snippet; failing that, the lowest-ordinal
// passage containing an answer string.
inline std::optional<std::size_t> align_positive(const Question& q, const std::vector<std::string>& normalized) {
  auto first_containing = [&](const std::vector<std::string>& needles) -> std::optional<std::size_t> {
    std::vector<std::string> norm;
    for (const auto& n : needles) {
      auto s = text::normalize_for_match(n);
      if (!s.empty()) norm.push_back(std::move(s));
    }
    if (norm.empty()) return std::nullopt;
    for (std::size_t i = 0; i < normalized.size(); ++i) {
      for (const auto& n : norm) {
        if (normalized[i].find(n) != std::string::npos) return i;
      }
    }
    return std::nullopt;
  };
  if (auto hit = first_containing(q.gold_snippets)) return hit;
  if (q.qtype == QuestionType::factoid) return first_containing(q.answers);
  return std::nullopt;
}

inline std::optional<Passage> align_positive(const Question& q, const PassageStore& store) {
  if (store.empty()) throw EmptyCorpus();
  if (auto ord = align_positive(q, normalized_texts(store))) return store[*ord];
  return std::nullopt;
}

struct TrainingInstance {
  Question question;
  Passage positive;
  std::vector<Passage> hard_negatives;
  std::vector<Passage> random_negatives;

  bool operator==(const TrainingInstance&) const = default;
};

enum class SplitName { train, dev, test };

inline std::string_view to_string(SplitName s) {
  switch (s) {
    case SplitName::train: return "train";
    case SplitName::dev: return "dev";
    case SplitName::test: return "test";
  }
  return "train";
}

struct DatasetSplit {
  SplitName name = SplitName::train;
  std::vector<TrainingInstance> instances;

  void validate() const {
    std::unordered_set<std::string> ids;
    for (const auto& inst : instances) {
      if (!ids.insert(inst.question.question_id).second) throw DuplicateId(inst.question.question_id);
    }
  }

  bool operator==(const DatasetSplit&) const = default;
};

struct AlignmentReport {
  std::size_t aligned = 0;
  std::size_t dropped = 0;
  std::vector<std::string> dropped_ids;
};

// Unaligned questions are dropped; survivors keep their input order.
inline std::vector<TrainingInstance> align_questions(const std::vector<Question>& questions, const PassageStore& store,
                                                     AlignmentReport* report = nullptr) {
  if (store.empty()) throw EmptyCorpus();
  const auto norm = normalized_texts(store);
  AlignmentReport rep;
  std::vector<TrainingInstance> out;
  for (const auto& q : questions) {
    if (auto ord = align_positive(q, norm)) {
      out.push_back(TrainingInstance{q, store[*ord], {}, {}});
      ++rep.aligned;
    } else {
      ++rep.dropped;
      rep.dropped_ids.push_back(q.question_id);
    }
  }
  if (report) *report = std::move(rep);
  return out;
}

struct NegativeConfig {
  std::size_t n_hard = 1;
  std::size_t n_random = 0;
  std::uint64_t seed = 0;
  MiningConfig mining{};
};

struct NegativeReport {
  std::size_t missing_hard = 0;       // instances that received fewer than n_hard
  std::size_t short_random = 0;       // instances whose random pool was smaller than n_random
};

// Hard negatives come from BM25 mining; random negatives are other questions' positives.
inline void attach_negatives(std::vector<TrainingInstance>& instances, const PassageStore& store,
                             const InvertedIndex& index, const NegativeConfig& cfg, NegativeReport* report = nullptr) {
  if (cfg.n_random > 0 && instances.size() < 2)
    throw InvalidArgument("random negatives need at least two instances");
  NegativeReport rep;

  std::vector<std::string> pool;
  {
    std::unordered_set<std::string> seen;
    for (const auto& inst : instances) {
      if (seen.insert(inst.positive.passage_id).second) pool.push_back(inst.positive.passage_id);
    }
  }

  MiningConfig mining = cfg.mining;
  mining.per_question = cfg.n_hard;
  const auto mask = make_subsample_mask(store.size(), mining.subsample_fraction, mining.seed);
  std::mt19937_64 rng(cfg.seed);

  for (auto& inst : instances) {
    inst.hard_negatives.clear();
    inst.random_negatives.clear();
    const auto pos = store.find(inst.positive.passage_id);
    if (!pos) throw InvalidArgument("positive '" + inst.positive.passage_id + "' is not in the store");

    if (cfg.n_hard > 0) {
      for (auto ord : mine_hard_negatives(index, store, inst.question, mining, {*pos}, &mask)) {
        inst.hard_negatives.push_back(store[ord]);
      }
      if (inst.hard_negatives.size() < cfg.n_hard) ++rep.missing_hard;
    }

    if (cfg.n_random > 0) {
      std::vector<std::string> cand;
      for (const auto& id : pool) {
        if (id != inst.positive.passage_id) cand.push_back(id);
      }
      std::shuffle(cand.begin(), cand.end(), rng);
      if (cand.size() < cfg.n_random) ++rep.short_random;
      cand.resize(std::min(cand.size(), cfg.n_random));
      for (const auto& id : cand) inst.random_negatives.push_back(store.by_id(id));
    }
  }
  if (report) *report = rep;
}

// Seeded assignment to train/dev/test; each split keeps the input order.
inline std::array<DatasetSplit, 3> split_instances(const std::vector<TrainingInstance>& instances,
                                                   double dev_fraction, double test_fraction, std::uint64_t seed) {
  if (dev_fraction < 0.0 || test_fraction < 0.0 || dev_fraction + test_fraction > 1.0)
    throw InvalidArgument("split fractions must be non-negative and sum to at most 1");
  const std::size_t n = instances.size();
  const auto n_dev = static_cast<std::size_t>(std::floor(dev_fraction * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> which(n, 0);
  for (std::size_t i = 0; i < n_dev; ++i) which[perm[i]] = 1;
  for (std::size_t i = n_dev; i < n_dev + n_test; ++i) which[perm[i]] = 2;

  std::array<DatasetSplit, 3> out{DatasetSplit{SplitName::train, {}}, DatasetSplit{SplitName::dev, {}},
                                  DatasetSplit{SplitName::test, {}}};
  for (std::size_t i = 0; i < n; ++i) out[static_cast<std::size_t>(which[i])].instances.push_back(instances[i]);
  return out;
}

// ---------------------------------------------------------------------------
// DPR JSON: an array of {question_id, question, qtype, answers, gold_snippets,
// positive_ctxs, negative_ctxs, hard_negative_ctxs}; ctx = {title, text, passage_id}.

namespace detail {

inline nlohmann::ordered_json ctx_to_json(const Passage& p) {
  nlohmann::ordered_json j;
  j["title"] = p.title;
  j["text"] = p.text;
  j["passage_id"] = p.passage_id;
  return j;
}

inline Passage ctx_from_json(const nlohmann::json& j) {
  Passage p;
  p.title = j.at("title").get<std::string>();
  p.text = j.at("text").get<std::string>();
  p.passage_id = j.at("passage_id").get<std::string>();
  const auto hash = p.passage_id.rfind('#');
  p.doc_id = p.passage_id.substr(0, hash);
  if (hash != std::string::npos) {
    const auto idx = std::string_view(p.passage_id).substr(hash + 1);
    if (!idx.empty() && std::all_of(idx.begin(), idx.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      p.chunk_index = std::stoull(std::string(idx));
    }
  }
  return p;
}

template <typename Json>
std::vector<Passage> ctx_list(const Json& j, std::string_view key) {
  std::vector<Passage> out;
  for (const auto& c : j.at(std::string(key))) out.push_back(ctx_from_json(c));
  return out;
}

}  // namespace detail

inline std::string serialize_dpr_json(const DatasetSplit& split) {
  split.validate();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& inst : split.instances) {
    nlohmann::ordered_json j;
    j["question_id"] = inst.question.question_id;
    j["question"] = inst.question.text;
    j["qtype"] = to_string(inst.question.qtype);
    j["answers"] = inst.question.answers;
    j["gold_snippets"] = inst.question.gold_snippets;
    j["positive_ctxs"] = nlohmann::ordered_json::array({detail::ctx_to_json(inst.positive)});
    auto neg = nlohmann::ordered_json::array();
    for (const auto& p : inst.random_negatives) neg.push_back(detail::ctx_to_json(p));
    j["negative_ctxs"] = std::move(neg);
    auto hard = nlohmann::ordered_json::array();
    for (const auto& p : inst.hard_negatives) hard.push_back(detail::ctx_to_json(p));
    j["hard_negative_ctxs"] = std::move(hard);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

inline DatasetSplit parse_dpr_json(std::string_view content, SplitName name = SplitName::train) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed DPR JSON: ") + e.what());
  }
  if (!root.is_array()) throw ParseError("DPR JSON must be an array");
  DatasetSplit split{name, {}};
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& j = root[i];
    try {
      TrainingInstance inst;
      inst.question.question_id = j.contains("question_id") ? j["question_id"].get<std::string>()
                                                            : "q" + std::to_string(i);
      inst.question.text = j.at("question").get<std::string>();
      inst.question.qtype = question_type_from_string(j.value("qtype", std::string("factoid")));
      inst.question.answers = j.at("answers").get<std::vector<std::string>>();
      inst.question.gold_snippets = j.value("gold_snippets", std::vector<std::string>{});
      const auto pos = detail::ctx_list(j, "positive_ctxs");
      if (pos.empty()) throw ParseError("instance " + std::to_string(i) + " has no positive_ctxs");
      inst.positive = pos.front();
      inst.random_negatives = detail::ctx_list(j, "negative_ctxs");
      inst.hard_negatives = detail::ctx_list(j, "hard_negative_ctxs");
      split.instances.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("instance " + std::to_string(i) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError("instance " + std::to_string(i) + ": " + e.what());
    }
  }
  split.validate();
  return split;
}

inline void emit_dpr_json(const DatasetSplit& split, const std::filesystem::path& path) {
  io::write_file(path, serialize_dpr_json(split));
}

inline DatasetSplit load_dpr_json(const std::filesystem::path& path, SplitName name = SplitName::train) {
  return parse_dpr_json(io::read_file(path), name);
}

}  // namespace dpr
