#pragma once

// Okapi BM25 over an in-memory inverted index, plus hard-negative mining.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dpr/corpus.hpp"
#include "dpr/error.hpp"
#include "dpr/io.hpp"
#include "dpr/text.hpp"
#include "dpr/types.hpp"

namespace dpr {

// Lowercased ASCII-alphanumeric runs. Bytes >= 0x80 (non-ASCII UTF-8) are kept
// inside tokens so that non-English words are not shredded.
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (text::is_ascii_alnum(c) || c >= 0x80) {
      cur.push_back(text::to_lower_ascii(ch));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const {
    if (!(k1 >= 0.0) || !std::isfinite(k1)) throw InvalidArgument("bm25 k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw InvalidArgument("bm25 b must lie in [0, 1]");
  }
};

struct Posting {
  std::uint32_t ordinal = 0;
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

class InvertedIndex {
 public:
  using PostingList = std::vector<Posting>;

  InvertedIndex() = default;

  static InvertedIndex build(const PassageStore& store) {
    if (store.empty()) throw EmptyCorpus();
    InvertedIndex idx;
    idx.ids_.reserve(store.size());
    idx.doc_lengths_.reserve(store.size());
    double total = 0.0;
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto tokens = tokenize(store[i].text);
      std::map<std::string_view, std::uint32_t> tf;
      for (const auto& t : tokens) ++tf[t];
      for (const auto& [term, count] : tf) {
        idx.postings_[std::string(term)].push_back(Posting{static_cast<std::uint32_t>(i), count});
      }
      idx.ids_.push_back(store[i].passage_id);
      idx.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
      total += static_cast<double>(tokens.size());
    }
    idx.avg_doc_length_ = total / static_cast<double>(store.size());
    return idx;
  }

  std::size_t size() const noexcept { return ids_.size(); }
  double avg_doc_length() const noexcept { return avg_doc_length_; }
  const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::unordered_map<std::string, PostingList>& postings() const noexcept { return postings_; }

  const PostingList* find(std::string_view term) const {
    auto it = postings_.find(std::string(term));
    return it == postings_.end() ? nullptr : &it->second;
  }

  std::size_t document_frequency(std::string_view term) const {
    const auto* list = find(term);
    return list ? list->size() : 0;
  }

  double idf(std::size_t df) const {
    const auto n = static_cast<double>(size());
    const auto d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
  }

  // Contribution of one query term occurring tf times in a passage of length dl.
  double term_score(double idf_value, std::uint32_t tf, std::uint32_t dl, const Bm25Params& p) const {
    const double norm = avg_doc_length_ > 0.0 ? static_cast<double>(dl) / avg_doc_length_ : 1.0;
    const double t = static_cast<double>(tf);
    return idf_value * (t * (p.k1 + 1.0)) / (t + p.k1 * (1.0 - p.b + p.b * norm));
  }

  bool operator==(const InvertedIndex& o) const {
    return ids_ == o.ids_ && doc_lengths_ == o.doc_lengths_ && avg_doc_length_ == o.avg_doc_length_ &&
           postings_ == o.postings_;
  }

  // Binary layout: "DRBM", u32 version, u64 N, f64 avgdl, N x (id, u32 length),
  // u64 terms, terms in byte order x (term, u32 n, n x (u32 ordinal, u32 tf)), u64 checksum.
  static constexpr std::string_view kMagic = "DRBM";
  static constexpr std::uint32_t kVersion = 1;

  std::string serialize() const {
    io::ByteWriter w;
    w.put_bytes(kMagic);
    w.put(kVersion);
    w.put(static_cast<std::uint64_t>(size()));
    w.put(avg_doc_length_);
    for (std::size_t i = 0; i < size(); ++i) {
      w.put_string(ids_[i]);
      w.put(doc_lengths_[i]);
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& kv : postings_) terms.push_back(&kv.first);
    std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });
    w.put(static_cast<std::uint64_t>(terms.size()));
    for (const auto* term : terms) {
      const auto& list = postings_.at(*term);
      w.put_string(*term);
      w.put(static_cast<std::uint32_t>(list.size()));
      for (const auto& p : list) {
        w.put(p.ordinal);
        w.put(p.tf);
      }
    }
    w.put(io::fnv1a64(w.bytes()));
    return w.bytes();
  }

  static InvertedIndex deserialize(std::string_view bytes) {
    if (bytes.size() < kMagic.size() + 4 + 8 || bytes.substr(0, kMagic.size()) != kMagic)
      throw CorruptIndex("not a BM25 index (bad magic)");
    const auto body = bytes.substr(0, bytes.size() - 8);
    io::ByteReader<CorruptIndex> tail(bytes.substr(bytes.size() - 8));
    if (tail.get<std::uint64_t>() != io::fnv1a64(body)) throw CorruptIndex("BM25 index checksum mismatch");

    io::ByteReader<CorruptIndex> r(body);
    r.get_bytes(kMagic.size());
    if (const auto v = r.get<std::uint32_t>(); v != kVersion) throw UnsupportedVersion(kVersion, v);
    InvertedIndex idx;
    const auto n = r.get<std::uint64_t>();
    idx.avg_doc_length_ = r.get<double>();
    for (std::uint64_t i = 0; i < n; ++i) {
      idx.ids_.push_back(r.get_string());
      idx.doc_lengths_.push_back(r.get<std::uint32_t>());
    }
    const auto terms = r.get<std::uint64_t>();
    for (std::uint64_t t = 0; t < terms; ++t) {
      auto term = r.get_string();
      const auto count = r.get<std::uint32_t>();
      PostingList list(count);
      for (auto& p : list) {
        p.ordinal = r.get<std::uint32_t>();
        p.tf = r.get<std::uint32_t>();
        if (p.ordinal >= n) throw CorruptIndex("posting ordinal out of range");
      }
      idx.postings_.emplace(std::move(term), std::move(list));
    }
    if (r.remaining() != 0) throw CorruptIndex("trailing bytes in BM25 index");
    return idx;
  }

 private:
  std::unordered_map<std::string, PostingList> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<std::string> ids_;
  double avg_doc_length_ = 0.0;
};

inline InvertedIndex build_index(const PassageStore& store) { return InvertedIndex::build(store); }

inline void save_index(const InvertedIndex& index, const std::filesystem::path& path) {
  io::write_file(path, index.serialize());
}

inline InvertedIndex load_bm25_index(const std::filesystem::path& path) {
  return InvertedIndex::deserialize(io::read_file(path));
}

// Scores one passage. Query tokens are summed in order, duplicates included.
inline double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_tokens,
                         std::size_t ordinal, const Bm25Params& params = {}) {
  if (ordinal >= index.size()) throw InvalidArgument("passage ordinal out of range");
  double score = 0.0;
  for (const auto& t : query_tokens) {
    const auto* list = index.find(t);
    if (!list) continue;
    auto it = std::lower_bound(list->begin(), list->end(), ordinal,
                               [](const Posting& p, std::size_t o) { return p.ordinal < o; });
    if (it == list->end() || it->ordinal != ordinal) continue;
    score += index.term_score(index.idf(list->size()), it->tf, index.doc_lengths()[ordinal], params);
  }
  return score;
}

// Ranks by score descending, ties by ascending ordinal. Only passages with a
// positive score are returned. `allowed`, when given, restricts the candidates.
inline RetrievalResult bm25_top_k(const InvertedIndex& index, std::string_view query, std::size_t k,
                                  const Bm25Params& params = {}, const std::vector<bool>* allowed = nullptr) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  params.validate();
  const auto tokens = tokenize(query);
  std::vector<double> acc(index.size(), 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<char> seen(index.size(), 0);
  for (const auto& t : tokens) {
    const auto* list = index.find(t);
    if (!list) continue;
    const double idf = index.idf(list->size());
    for (const auto& p : *list) {
      acc[p.ordinal] += index.term_score(idf, p.tf, index.doc_lengths()[p.ordinal], params);
      if (!seen[p.ordinal]) {
        seen[p.ordinal] = 1;
        touched.push_back(p.ordinal);
      }
    }
  }

  std::vector<std::uint32_t> cand;
  cand.reserve(touched.size());
  for (auto o : touched) {
    if (acc[o] > 0.0 && (!allowed || (*allowed)[o])) cand.push_back(o);
  }
  auto better = [&](std::uint32_t a, std::uint32_t b) { return acc[a] > acc[b] || (acc[a] == acc[b] && a < b); };
  const std::size_t keep = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), better);

  RetrievalResult out;
  out.hits.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    out.hits.push_back(Hit{index.ids()[cand[i]], acc[cand[i]], i + 1, cand[i]});
  }
  return out;
}

struct MiningConfig {
  std::size_t top_n = 100;            // BM25 candidate pool per question
  std::size_t per_question = 1;       // negatives to keep
  double subsample_fraction = 1.0;    // fraction of the corpus eligible for mining
  std::uint64_t seed = 0;
  Bm25Params bm25{};
};

// Seeded Bernoulli mask selecting roughly `fraction` of the passages.
inline std::vector<bool> make_subsample_mask(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("subsample fraction must lie in (0, 1]");
  std::vector<bool> mask(n, true);
  if (fraction >= 1.0) return mask;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) mask[i] = u(rng) < fraction;
  return mask;
}

// Highest-ranked BM25 passages among the top_n that do not contain the answer
// evidence of `q`, in rank order. Ordinals in `exclude` are never returned.
inline std::vector<std::size_t> mine_hard_negatives(const InvertedIndex& index, const PassageStore& store,
                                                    const Question& q, const MiningConfig& cfg,
                                                    const std::unordered_set<std::size_t>& exclude = {},
                                                    const std::vector<bool>* allowed = nullptr) {
  if (index.size() != store.size()) throw InvalidArgument("BM25 index and passage store differ in size");
  if (cfg.top_n == 0) throw InvalidArgument("top_n must be >= 1");
  if (answer_evidence(q).empty()) throw InvalidArgument("question '" + q.question_id + "' has no answer evidence");
  std::vector<std::size_t> out;
  const auto ranked = bm25_top_k(index, q.text, cfg.top_n, cfg.bm25, allowed);
  for (const auto& hit : ranked.hits) {
    if (out.size() >= cfg.per_question) break;
    if (exclude.contains(hit.ordinal)) continue;
    if (contains_answer(store[hit.ordinal].text, q)) continue;
    out.push_back(hit.ordinal);
  }
  return out;
}

inline std::optional<Passage> mine_hard_negative(const InvertedIndex& index, const PassageStore& store,
                                                 const Question& q, std::size_t top_n = 100) {
  MiningConfig cfg;
  cfg.top_n = top_n;
  cfg.per_question = 1;
  const auto found = mine_hard_negatives(index, store, q, cfg);
  if (found.empty()) return std::nullopt;
  return store[found.front()];
}

}  // namespace dpr
