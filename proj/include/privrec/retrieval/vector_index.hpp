// Copyright 2026 The privrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "privrec/binary_io.hpp"
#include "privrec/catalog.hpp"
#include "privrec/error.hpp"
#include "privrec/retrieval/embedding.hpp"

namespace privrec::retrieval {

struct IndexRow {
  std::string product_id;
  std::string main_category;
  Embedding embedding;
};

struct Neighbor {
  std::string product_id;
  std::string main_category;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Exact cosine-similarity index. Immutable after construction, so concurrent
// queries are safe.
class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(std::size_t dimension, std::vector<IndexRow> rows)
      : dimension_(dimension), rows_(std::move(rows)) {
    std::unordered_set<std::string> seen;
    norms_.reserve(rows_.size());
    for (const auto& r : rows_) {
      if (r.embedding.dimension() != dimension_) {
        throw Error(ErrorKind::kShape, "index row has the wrong dimension: " + r.product_id);
      }
      for (double v : r.embedding.values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::kShape, "non-finite embedding: " + r.product_id);
      }
      if (!seen.insert(r.product_id).second) {
        throw Error(ErrorKind::kFormat, "duplicate product id in index: " + r.product_id);
      }
      norms_.push_back(norm(r.embedding));
    }
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::vector<IndexRow>& rows() const { return rows_; }

  // Top-k rows by descending cosine similarity; ties by ascending product id.
  // Rows with a zero embedding are never returned.
  std::vector<Neighbor> nearest(const Embedding& query, std::size_t k) const {
    return nearest_if(query, k, [](const IndexRow&) { return true; });
  }

  // As nearest(), restricted to rows satisfying `keep`.
  template <typename Pred>
  std::vector<Neighbor> nearest_if(const Embedding& query, std::size_t k, Pred&& keep) const {
    if (rows_.empty()) throw Error(ErrorKind::kUndefined, "nearest: index is empty");
    if (k == 0) throw Error(ErrorKind::kConfig, "nearest: k must be positive");
    if (query.dimension() != dimension_) throw Error(ErrorKind::kShape, "nearest: dimension mismatch");
    const double qn = norm(query);
    if (qn == 0.0) throw Error(ErrorKind::kUndefined, "nearest: zero query vector");

    struct Scored {
      double sim;
      std::size_t row;
    };
    std::vector<Scored> scored;
    scored.reserve(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (norms_[i] == 0.0 || !keep(rows_[i])) continue;
      double dot = 0.0;
      const auto& v = rows_[i].embedding.values;
      for (std::size_t d = 0; d < dimension_; ++d) dot += query.values[d] * v[d];
      scored.push_back({std::clamp(dot / (qn * norms_[i]), -1.0, 1.0), i});
    }
    auto better = [&](const Scored& a, const Scored& b) {
      if (a.sim != b.sim) return a.sim > b.sim;
      return rows_[a.row].product_id < rows_[b.row].product_id;
    };
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), better);
    std::vector<Neighbor> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      const auto& r = rows_[scored[i].row];
      out.push_back({r.product_id, r.main_category, scored[i].sim});
    }
    return out;
  }

 private:
  std::size_t dimension_ = 0;
  std::vector<IndexRow> rows_;
  std::vector<double> norms_;
};

// One row per product, keyed by the embedding of its canonical text.
inline VectorIndex build_index(const Catalog& catalog, const EmbeddingProvider& provider,
                               std::size_t batch_size = 64) {
  if (catalog.empty()) throw Error(ErrorKind::kEmptyCatalog, "build_index: catalog is empty");
  std::vector<IndexRow> rows;
  rows.reserve(catalog.size());
  const auto& products = catalog.products();
  for (std::size_t start = 0; start < products.size(); start += batch_size) {
    const std::size_t end = std::min(products.size(), start + batch_size);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(canonical_text(products[i]).text);
    auto embeddings = provider.embed(texts);
    if (embeddings.size() != texts.size()) {
      throw Error(ErrorKind::kProtocol, "embedding provider returned the wrong number of vectors");
    }
    for (std::size_t i = start; i < end; ++i) {
      rows.push_back({products[i].id, products[i].main_category,
                      std::move(embeddings[i - start])});
    }
  }
  return VectorIndex(provider.dimension(), std::move(rows));
}

// Index file, little-endian:
//   magic "PRVI" | u32 version | u32 dimension | u64 row count
//   | row count x (u32 len, id bytes, u32 len, category bytes, D x f64)
inline constexpr char kIndexMagic[4] = {'P', 'R', 'V', 'I'};
inline constexpr uint32_t kIndexVersion = 1;

inline void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(kIndexMagic, 4);
  binary::put<uint32_t>(out, kIndexVersion);
  binary::put<uint32_t>(out, static_cast<uint32_t>(index.dimension()));
  binary::put<uint64_t>(out, index.size());
  for (const auto& r : index.rows()) {
    binary::put_string(out, r.product_id);
    binary::put_string(out, r.main_category);
    for (double v : r.embedding.values) binary::put<double>(out, v);
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

inline VectorIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kIndexMagic, 4) != 0) {
    throw Error(ErrorKind::kFormat, "not a vector index file");
  }
  if (binary::get<uint32_t>(in) != kIndexVersion) {
    throw Error(ErrorKind::kFormat, "unsupported vector index version");
  }
  const auto dimension = binary::get<uint32_t>(in);
  const auto count = binary::get<uint64_t>(in);
  std::vector<IndexRow> rows;
  for (uint64_t i = 0; i < count; ++i) {
    IndexRow r;
    r.product_id = binary::get_string(in);
    r.main_category = binary::get_string(in);
    r.embedding.values.resize(dimension);
    for (auto& v : r.embedding.values) v = binary::get<double>(in);
    rows.push_back(std::move(r));
  }
  return VectorIndex(dimension, std::move(rows));
}

}  // namespace privrec::retrieval
