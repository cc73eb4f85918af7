#pragma once

// Exact maximum-inner-product search over a flat row-major matrix of passage
// embeddings. Scores accumulate in double; ties go to the lower row ordinal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dpr/corpus.hpp"
#include "dpr/encoder.hpp"
#include "dpr/error.hpp"
#include "dpr/io.hpp"
#include "dpr/types.hpp"

namespace dpr {

struct SearchOptions {
  std::size_t block_rows = 256;
  std::size_t threads = 1;
};

class FlatIndex {
 public:
  FlatIndex() = default;

  FlatIndex(std::size_t dim, std::vector<float> vectors, std::vector<std::string> ids)
      : dim_(dim), vectors_(std::move(vectors)), ids_(std::move(ids)) {
    if (dim_ == 0) throw InvalidArgument("index dimension must be >= 1");
    if (vectors_.size() != dim_ * ids_.size())
      throw InvalidArgument("vector block holds " + std::to_string(vectors_.size()) + " floats, expected " +
                            std::to_string(dim_ * ids_.size()));
    for (float v : vectors_) {
      if (!std::isfinite(v)) throw InvalidArgument("index vectors must be finite");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids_) {
      if (!seen.insert(id).second) throw DuplicateId(id);
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<float>& vectors() const noexcept { return vectors_; }
  std::span<const float> row(std::size_t i) const { return {vectors_.data() + i * dim_, dim_}; }

  bool operator==(const FlatIndex&) const = default;

  // Blocked scan with a bounded heap per worker; identical to search_naive.
  RetrievalResult search(std::span<const float> query, std::size_t k, const SearchOptions& opts = {}) const {
    check_query(query, k);
    const std::size_t m = size();
    const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, m == 0 ? 1 : m));
    const std::size_t block = std::max<std::size_t>(1, opts.block_rows);

    std::vector<std::vector<Scored>> partial(threads);
    auto worker = [&](std::size_t t) {
      const std::size_t begin = m * t / threads;
      const std::size_t end = m * (t + 1) / threads;
      partial[t] = scan(query, begin, end, std::min(k, m), block);
    };
    if (threads == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
      for (auto& th : pool) th.join();
    }

    std::vector<Scored> merged;
    for (auto& p : partial) merged.insert(merged.end(), p.begin(), p.end());
    std::sort(merged.begin(), merged.end(), better);
    merged.resize(std::min(merged.size(), std::min(k, m)));
    return to_result(merged);
  }

  // Reference path: score every row, full sort.
  RetrievalResult search_naive(std::span<const float> query, std::size_t k) const {
    check_query(query, k);
    std::vector<Scored> all(size());
    for (std::size_t i = 0; i < size(); ++i) all[i] = Scored{sim(query, row(i)), static_cast<std::uint32_t>(i)};
    std::sort(all.begin(), all.end(), better);
    all.resize(std::min(k, all.size()));
    return to_result(all);
  }

  RetrievalResult search(const Embedding& q, std::size_t k, const SearchOptions& opts = {}) const {
    return search(std::span<const float>(q), k, opts);
  }

  // Layout: "DRIX", u32 version, u32 d, u64 M, M x (u32 len, UTF-8 id),
  // M*d f32 LE row-major, u64 FNV-1a checksum of all preceding bytes.
  static constexpr std::string_view kMagic = "DRIX";
  static constexpr std::uint32_t kVersion = 1;

  std::string serialize() const {
    io::ByteWriter w;
    w.put_bytes(kMagic);
    w.put(kVersion);
    w.put(static_cast<std::uint32_t>(dim_));
    w.put(static_cast<std::uint64_t>(size()));
    for (const auto& id : ids_) w.put_string(id);
    for (float v : vectors_) w.put(v);
    w.put(io::fnv1a64(w.bytes()));
    return w.bytes();
  }

  static FlatIndex deserialize(std::string_view bytes) {
    if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic)
      throw CorruptIndex("not a dense index (bad magic)");
    io::ByteReader<CorruptIndex> head(bytes.substr(kMagic.size()));
    if (const auto v = head.get<std::uint32_t>(); v != kVersion) throw UnsupportedVersion(kVersion, v);
    if (bytes.size() < kMagic.size() + 4 + 4 + 8 + 8) throw CorruptIndex("dense index truncated");
    const auto body = bytes.substr(0, bytes.size() - 8);
    io::ByteReader<CorruptIndex> tail(bytes.substr(bytes.size() - 8));
    if (tail.get<std::uint64_t>() != io::fnv1a64(body)) throw CorruptIndex("dense index checksum mismatch");

    io::ByteReader<CorruptIndex> r(body);
    r.get_bytes(kMagic.size() + 4);
    const auto d = r.get<std::uint32_t>();
    const auto m = r.get<std::uint64_t>();
    std::vector<std::string> ids;
    ids.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) ids.push_back(r.get_string());
    if (r.remaining() != m * d * sizeof(float)) throw CorruptIndex("dense index vector block has the wrong size");
    std::vector<float> vec(m * d);
    for (auto& v : vec) v = r.get<float>();
    try {
      return FlatIndex(d, std::move(vec), std::move(ids));
    } catch (const Error& e) {
      throw CorruptIndex(std::string("dense index content invalid: ") + e.what());
    }
  }

 private:
  struct Scored {
    double score = 0.0;
    std::uint32_t ordinal = 0;
  };

  static bool better(const Scored& a, const Scored& b) {
    return a.score > b.score || (a.score == b.score && a.ordinal < b.ordinal);
  }

  void check_query(std::span<const float> query, std::size_t k) const {
    if (query.size() != dim_) throw DimensionError(dim_, query.size());
    if (k == 0) throw InvalidArgument("k must be >= 1");
  }

  // Heap ordered by `better`, so the front is the worst retained hit.
  std::vector<Scored> scan(std::span<const float> query, std::size_t begin, std::size_t end, std::size_t k,
                           std::size_t block) const {
    std::vector<Scored> heap;
    heap.reserve(k + 1);
    std::vector<double> scores(block);
    const float* q = query.data();
    for (std::size_t b = begin; b < end; b += block) {
      const std::size_t e = std::min(end, b + block);
      for (std::size_t i = b; i < e; ++i) {
        const float* r = vectors_.data() + i * dim_;
        double acc = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) acc += static_cast<double>(q[c]) * static_cast<double>(r[c]);
        scores[i - b] = acc;
      }
      for (std::size_t i = b; i < e; ++i) {
        const Scored s{scores[i - b], static_cast<std::uint32_t>(i)};
        if (heap.size() < k) {
          heap.push_back(s);
          std::push_heap(heap.begin(), heap.end(), better);
        } else if (better(s, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), better);
          heap.back() = s;
          std::push_heap(heap.begin(), heap.end(), better);
        }
      }
    }
    return heap;
  }

  RetrievalResult to_result(const std::vector<Scored>& ranked) const {
    RetrievalResult out;
    out.hits.reserve(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      out.hits.push_back(Hit{ids_[ranked[i].ordinal], ranked[i].score, i + 1, ranked[i].ordinal});
    }
    return out;
  }

  std::size_t dim_ = 0;
  std::vector<float> vectors_;
  std::vector<std::string> ids_;
};

// Encodes every passage of `store` with the passage tower; row i is passage i.
// Rows are produced in batches of batch_rows, spread across `threads` workers.
template <typename Real>
FlatIndex build_dense_index(const EncoderModel<Real>& model, const PassageStore& store, std::size_t batch_rows = 1024,
                            std::size_t threads = 1) {
  if (store.empty()) throw EmptyCorpus();
  const std::size_t d = model.dim();
  const std::size_t m = store.size();
  batch_rows = std::max<std::size_t>(1, batch_rows);
  std::vector<float> vec(m * d);
  const std::size_t batches = (m + batch_rows - 1) / batch_rows;

  auto encode_batches = [&](std::size_t first, std::size_t stride) {
    for (std::size_t bi = first; bi < batches; bi += stride) {
      for (std::size_t i = bi * batch_rows; i < std::min(m, (bi + 1) * batch_rows); ++i) {
        const auto e = model.encode_passage(store[i]);
        std::transform(e.begin(), e.end(), vec.begin() + static_cast<std::ptrdiff_t>(i * d),
                       [](Real v) { return static_cast<float>(v); });
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, batches));
  if (threads == 1) {
    encode_batches(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(encode_batches, t, threads);
    for (auto& th : pool) th.join();
  }

  std::vector<std::string> ids;
  ids.reserve(m);
  for (const auto& p : store.passages()) ids.push_back(p.passage_id);
  return FlatIndex(d, std::move(vec), std::move(ids));
}

inline void save_index(const FlatIndex& index, const std::filesystem::path& path) {
  io::write_file(path, index.serialize());
}

inline FlatIndex load_dense_index(const std::filesystem::path& path) {
  return FlatIndex::deserialize(io::read_file(path));
}

}  // namespace dpr
