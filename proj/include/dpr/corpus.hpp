#pragma once

// Document cleaning, fixed-size word chunking and the JSONL passage store.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dpr/error.hpp"
#include "dpr/io.hpp"
#include "dpr/text.hpp"

namespace dpr {

inline constexpr std::size_t kDefaultChunkSize = 100;
inline constexpr std::string_view kDefaultSeparator = "[SEP]";

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;

  bool operator==(const Document&) const = default;
};

struct Passage {
  std::string passage_id;  // "<doc_id>#<chunk_index>"
  std::string doc_id;
  std::string title;
  std::string text;
  std::size_t chunk_index = 0;

  bool operator==(const Passage&) const = default;
};

inline std::string make_passage_id(std::string_view doc_id, std::size_t chunk_index) {
  return std::string(doc_id) + "#" + std::to_string(chunk_index);
}

// Ordered, immutable collection of passages with id -> ordinal lookup.
class PassageStore {
 public:
  PassageStore() = default;

  explicit PassageStore(std::vector<Passage> passages, std::size_t chunk_size = kDefaultChunkSize,
                        std::string corpus_checksum = {})
      : passages_(std::move(passages)), chunk_size_(chunk_size), corpus_checksum_(std::move(corpus_checksum)) {
    ordinal_.reserve(passages_.size());
    for (std::size_t i = 0; i < passages_.size(); ++i) {
      if (!ordinal_.emplace(passages_[i].passage_id, i).second) throw DuplicateId(passages_[i].passage_id);
    }
  }

  std::size_t size() const noexcept { return passages_.size(); }
  bool empty() const noexcept { return passages_.empty(); }

  const Passage& operator[](std::size_t ordinal) const { return passages_[ordinal]; }
  const Passage& at(std::size_t ordinal) const { return passages_.at(ordinal); }
  const std::vector<Passage>& passages() const noexcept { return passages_; }

  std::optional<std::size_t> find(std::string_view passage_id) const {
    auto it = ordinal_.find(std::string(passage_id));
    if (it == ordinal_.end()) return std::nullopt;
    return it->second;
  }

  const Passage& by_id(std::string_view passage_id) const {
    auto ord = find(passage_id);
    if (!ord) throw InvalidArgument("unknown passage id: " + std::string(passage_id));
    return passages_[*ord];
  }

  std::size_t chunk_size() const noexcept { return chunk_size_; }
  const std::string& corpus_checksum() const noexcept { return corpus_checksum_; }

  bool operator==(const PassageStore& other) const {
    return passages_ == other.passages_ && chunk_size_ == other.chunk_size_ &&
           corpus_checksum_ == other.corpus_checksum_;
  }

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> ordinal_;
  std::size_t chunk_size_ = kDefaultChunkSize;
  std::string corpus_checksum_;
};

namespace detail {

// Replaces C0/C1 control characters and DEL with a space; input must be valid UTF-8.
inline std::string strip_controls(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x20 || c == 0x7F) {
      out.push_back(' ');
    } else if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) >= 0x80 &&
               static_cast<unsigned char>(s[i + 1]) <= 0x9F) {
      out.push_back(' ');
      ++i;
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

inline std::string clean_text(std::string_view raw, std::string_view what) {
  if (!text::is_valid_utf8(raw)) throw EncodingError(std::string(what) + " is not valid UTF-8");
  return text::collapse_whitespace(strip_controls(raw));
}

}  // namespace detail

inline Document clean_document(std::string_view raw, std::string_view title, std::string_view doc_id) {
  Document doc;
  doc.doc_id = std::string(doc_id);
  doc.title = detail::clean_text(title, "title of '" + doc.doc_id + "'");
  doc.body = detail::clean_text(raw, "body of '" + doc.doc_id + "'");
  if (doc.body.empty()) throw EmptyDocument(doc.doc_id);
  return doc;
}

// Splits the body into disjoint blocks of chunk_size words; the final block may be shorter.
inline std::vector<Passage> chunk_document(const Document& doc, std::size_t chunk_size = kDefaultChunkSize) {
  if (chunk_size == 0) throw InvalidArgument("chunk_size must be >= 1");
  const auto words = text::split_words(doc.body);
  if (words.empty()) throw EmptyDocument(doc.doc_id);

  std::vector<Passage> out;
  out.reserve((words.size() + chunk_size - 1) / chunk_size);
  for (std::size_t start = 0, idx = 0; start < words.size(); start += chunk_size, ++idx) {
    const std::size_t end = std::min(start + chunk_size, words.size());
    std::string body;
    for (std::size_t w = start; w < end; ++w) {
      if (w > start) body.push_back(' ');
      body.append(words[w]);
    }
    out.push_back(Passage{make_passage_id(doc.doc_id, idx), doc.doc_id, doc.title, std::move(body), idx});
  }
  return out;
}

inline std::string render_encoder_input(const Passage& p, std::string_view separator = kDefaultSeparator) {
  std::string out;
  out.reserve(p.title.size() + separator.size() + p.text.size() + 2);
  out.append(p.title).append(" ").append(separator).append(" ").append(p.text);
  return out;
}

// ---------------------------------------------------------------------------
// Raw corpus JSONL: {"doc_id", "title", "body"} per line.

struct RawDocument {
  std::string doc_id;
  std::string title;
  std::string body;
};

inline std::vector<RawDocument> parse_corpus_jsonl(std::string_view content) {
  std::vector<RawDocument> docs;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::collapse_whitespace(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      docs.push_back(RawDocument{j.at("doc_id").get<std::string>(), j.value("title", std::string{}),
                                 j.at("body").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed corpus record: ") + e.what(), lineno);
    }
  }
  return docs;
}

struct IngestStats {
  std::size_t documents = 0;
  std::size_t passages = 0;
  std::size_t dropped = 0;
  std::vector<std::string> dropped_ids;
};

// Cleans and chunks every document; empty documents are dropped and reported.
inline PassageStore build_store(const std::vector<RawDocument>& docs, std::size_t chunk_size,
                                std::string corpus_checksum = {}, IngestStats* stats = nullptr) {
  if (chunk_size == 0) throw InvalidArgument("chunk_size must be >= 1");
  IngestStats local;
  std::unordered_set<std::string> seen;
  std::vector<Passage> passages;
  for (const auto& raw : docs) {
    if (!seen.insert(raw.doc_id).second) throw DuplicateId(raw.doc_id);
    ++local.documents;
    try {
      auto doc = clean_document(raw.body, raw.title, raw.doc_id);
      for (auto& p : chunk_document(doc, chunk_size)) passages.push_back(std::move(p));
    } catch (const EmptyDocument&) {
      ++local.dropped;
      local.dropped_ids.push_back(raw.doc_id);
    }
  }
  local.passages = passages.size();
  if (stats) *stats = std::move(local);
  return PassageStore(std::move(passages), chunk_size, std::move(corpus_checksum));
}

inline PassageStore ingest_corpus(const std::filesystem::path& corpus, std::size_t chunk_size = kDefaultChunkSize,
                                  IngestStats* stats = nullptr) {
  const auto content = io::read_file(corpus);
  return build_store(parse_corpus_jsonl(content), chunk_size, io::to_hex(io::fnv1a64(content)), stats);
}

// ---------------------------------------------------------------------------
// Passage store JSONL. Line 1 is metadata; each following line is one passage.

inline constexpr std::string_view kStoreFormat = "dpr-passages";
inline constexpr int kStoreVersion = 1;

inline std::string serialize_store(const PassageStore& store) {
  std::string out;
  nlohmann::ordered_json meta;
  meta["format"] = kStoreFormat;
  meta["version"] = kStoreVersion;
  meta["chunk_size"] = store.chunk_size();
  meta["corpus_checksum"] = store.corpus_checksum();
  meta["passages"] = store.size();
  out += meta.dump() + "\n";
  for (const auto& p : store.passages()) {
    nlohmann::ordered_json j;
    j["passage_id"] = p.passage_id;
    j["doc_id"] = p.doc_id;
    j["title"] = p.title;
    j["text"] = p.text;
    j["chunk_index"] = p.chunk_index;
    out += j.dump() + "\n";
  }
  return out;
}

inline PassageStore parse_store(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;

  auto parse_line = [&](const std::string& l) {
    try {
      return nlohmann::json::parse(l);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
  };

  if (!std::getline(in, line)) throw ParseError("empty passage store", 1);
  ++lineno;
  const auto meta = parse_line(line);
  std::size_t expected = 0;
  std::size_t chunk_size = 0;
  std::string checksum;
  try {
    if (meta.at("format").get<std::string>() != kStoreFormat) throw ParseError("not a passage store", lineno);
    if (meta.at("version").get<int>() != kStoreVersion)
      throw UnsupportedVersion(kStoreVersion, meta.at("version").get<std::uint32_t>());
    chunk_size = meta.at("chunk_size").get<std::size_t>();
    checksum = meta.at("corpus_checksum").get<std::string>();
    expected = meta.at("passages").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad metadata: ") + e.what(), lineno);
  }

  std::vector<Passage> passages;
  passages.reserve(expected);
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto j = parse_line(line);
    Passage p;
    try {
      p.passage_id = j.at("passage_id").get<std::string>();
      p.doc_id = j.at("doc_id").get<std::string>();
      p.title = j.at("title").get<std::string>();
      p.text = j.at("text").get<std::string>();
      p.chunk_index = j.at("chunk_index").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad passage record: ") + e.what(), lineno);
    }
    if (!seen.insert(p.passage_id).second) throw DuplicateId(p.passage_id);
    passages.push_back(std::move(p));
  }
  if (passages.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " passages, found " + std::to_string(passages.size()) +
                         " (truncated store?)",
                     lineno);
  }
  return PassageStore(std::move(passages), chunk_size, std::move(checksum));
}

inline void save_store(const PassageStore& store, const std::filesystem::path& path) {
  io::write_file(path, serialize_store(store));
}

inline PassageStore load_store(const std::filesystem::path& path) { return parse_store(io::read_file(path)); }

}  // namespace dpr
