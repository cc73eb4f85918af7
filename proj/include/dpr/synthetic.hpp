#pragma once

// Seeded generator for a lexical toy corpus with BioASQ-style questions. Every
// question shares one distinctive rare token with exactly one passage, which
// also holds the answer token.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dpr/corpus.hpp"
#include "dpr/error.hpp"

namespace dpr::synthetic {

struct Config {
  std::size_t documents = 1000;
  std::size_t passages_per_document = 2;
  std::size_t words_per_passage = kDefaultChunkSize;
  std::size_t questions = 200;
  std::size_t vocabulary = 600;
  double yesno_fraction = 0.25;
  double snippetless_fraction = 0.2;   // factoid questions aligned by answer string only
  std::size_t other_type_questions = 0;  // list/summary entries that parsing drops
  std::uint64_t seed = 7;
};

struct Corpus {
  std::vector<RawDocument> documents;
  nlohmann::ordered_json bioasq;  // {"questions": [...]}
};

inline std::vector<std::string> make_vocabulary(std::size_t n) {
  static const char* syl[] = {"ka", "lo", "mi", "ne", "ra", "tu", "si", "pe", "vo", "da", "gi", "zu",
                              "fa", "ho", "be", "ly", "no", "ce", "te", "mo", "pa", "ri", "su", "we"};
  constexpr std::size_t ns = std::size(syl);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; out.size() < n; ++i) {
    std::string w;
    std::size_t x = i;
    do {
      w += syl[x % ns];
      x /= ns;
    } while (x > 0);
    if (w.size() < 4) w += "ra";
    out.push_back(w);
  }
  return out;
}

inline std::string rare_token(std::size_t i) { return "zq" + std::to_string(1000 + i); }
inline std::string answer_token(std::size_t i) { return "ax" + std::to_string(5000 + i) + "b"; }

inline Corpus generate(const Config& cfg) {
  const std::size_t n_passages = cfg.documents * cfg.passages_per_document;
  if (cfg.questions > n_passages) throw InvalidArgument("more questions than passages");
  if (cfg.words_per_passage < 12) throw InvalidArgument("passages must hold at least 12 words");

  std::mt19937_64 rng(cfg.seed);
  const auto vocab = make_vocabulary(cfg.vocabulary);
  std::vector<double> weights(vocab.size());
  for (std::size_t r = 0; r < vocab.size(); ++r) weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), 0.8);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

  std::vector<std::vector<std::string>> passages(n_passages);
  for (auto& p : passages) {
    p.reserve(cfg.words_per_passage);
    for (std::size_t w = 0; w < cfg.words_per_passage; ++w) p.push_back(vocab[pick(rng)]);
  }

  std::vector<std::size_t> slots(n_passages);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(cfg.questions);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto questions = nlohmann::ordered_json::array();
  for (std::size_t q = 0; q < cfg.questions; ++q) {
    auto& words = passages[slots[q]];
    std::uniform_int_distribution<std::size_t> at(3, cfg.words_per_passage - 6);
    const std::size_t pos = at(rng);
    words[pos] = rare_token(q);
    words[pos + 1] = answer_token(q);

    std::string snippet;
    for (std::size_t i = pos - 3; i < pos + 5; ++i) snippet += (snippet.empty() ? "" : " ") + words[i];

    // Context words for the question come from the positive passage itself.
    std::uniform_int_distribution<std::size_t> any(0, cfg.words_per_passage - 1);
    std::vector<std::string> ctx;
    while (ctx.size() < 3) {
      const auto& w = words[any(rng)];
      if (w != rare_token(q) && w != answer_token(q)) ctx.push_back(w);
    }

    const bool yesno = unit(rng) < cfg.yesno_fraction;
    nlohmann::ordered_json item;
    item["id"] = "syn" + std::to_string(q);
    if (yesno) {
      item["type"] = "yesno";
      item["body"] = "Is " + rare_token(q) + " linked to " + ctx[0] + " " + ctx[1] + " in " + ctx[2] + "?";
      item["exact_answer"] = (q % 2 == 0) ? "yes" : "no";
      item["snippets"] = nlohmann::ordered_json::array({{{"text", snippet}}});
    } else {
      item["type"] = "factoid";
      item["body"] = "Which " + ctx[0] + " " + ctx[1] + " is regulated by " + rare_token(q) + " in " + ctx[2] + "?";
      item["exact_answer"] = nlohmann::ordered_json::array({nlohmann::ordered_json::array({answer_token(q)})});
      if (unit(rng) >= cfg.snippetless_fraction) {
        item["snippets"] = nlohmann::ordered_json::array({{{"text", snippet}}});
      } else {
        item["snippets"] = nlohmann::ordered_json::array();
      }
    }
    questions.push_back(std::move(item));
  }
  for (std::size_t i = 0; i < cfg.other_type_questions; ++i) {
    nlohmann::ordered_json item;
    item["id"] = "other" + std::to_string(i);
    item["type"] = i % 2 == 0 ? "list" : "summary";
    item["body"] = "List the " + vocab[i % vocab.size()] + " entries.";
    item["exact_answer"] = nlohmann::ordered_json::array({nlohmann::ordered_json::array({vocab[0]})});
    item["snippets"] = nlohmann::ordered_json::array();
    questions.push_back(std::move(item));
  }

  Corpus out;
  out.bioasq["questions"] = std::move(questions);
  for (std::size_t d = 0; d < cfg.documents; ++d) {
    RawDocument doc;
    doc.doc_id = "doc" + std::to_string(d);
    for (int t = 0; t < 3; ++t) {
      auto w = vocab[pick(rng)];
      w[0] = static_cast<char>(w[0] - 'a' + 'A');
      doc.title += (t ? " " : "") + w;
    }
    for (std::size_t p = 0; p < cfg.passages_per_document; ++p) {
      for (const auto& w : passages[d * cfg.passages_per_document + p]) {
        doc.body += (doc.body.empty() ? "" : " ") + w;
      }
    }
    out.documents.push_back(std::move(doc));
  }
  return out;
}

inline std::string corpus_jsonl(const Corpus& c) {
  std::string out;
  for (const auto& d : c.documents) {
    nlohmann::ordered_json j;
    j["doc_id"] = d.doc_id;
    j["title"] = d.title;
    j["body"] = d.body;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace dpr::synthetic
