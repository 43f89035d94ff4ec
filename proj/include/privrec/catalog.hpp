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
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "privrec/error.hpp"
#include "privrec/hash.hpp"

namespace privrec {

struct Product {
  std::string id;
  std::string main_category;
  std::string title;
  std::vector<std::string> features;
  std::vector<std::string> description;
  std::map<std::string, std::string> details;
  std::optional<bool> ground_truth_sensitive;
  std::optional<double> sensitivity_score;  // in [0,1] when present

  friend bool operator==(const Product&, const Product&) = default;
};

struct ProductText {
  std::string text;
  friend bool operator==(const ProductText&, const ProductText&) = default;
};

namespace detail {

// Collapses runs of whitespace (including newlines) to one space and trims.
inline std::string squash_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

inline std::string join_squashed(const std::vector<std::string>& parts,
                                 std::string_view sep) {
  std::string out;
  for (const auto& part : parts) {
    std::string s = squash_whitespace(part);
    if (s.empty()) continue;
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace detail

// One-line textual view of a product, used for classification, prompting and
// embedding:
//   Title: <t> | Main Category: <c> | Features: <f1; f2> | Description: <d>
inline ProductText canonical_text(const Product& p) {
  std::string text;
  text += "Title: " + detail::squash_whitespace(p.title);
  text += " | Main Category: " + detail::squash_whitespace(p.main_category);
  text += " | Features: " + detail::join_squashed(p.features, "; ");
  text += " | Description: " + detail::join_squashed(p.description, " ");
  return ProductText{std::move(text)};
}

struct PurchaseHistory {
  std::string user_id;
  std::vector<Product> items;  // chronological, oldest first
  Product target;              // the held-out next purchase
};

// Immutable once ingestion has finished; safe for concurrent readers.
class Catalog {
 public:
  // Returns false (and leaves the catalog unchanged) on a duplicate id.
  bool add(Product p) {
    if (p.id.empty()) throw Error(ErrorKind::kFormat, "product id is empty");
    if (p.sensitivity_score &&
        (*p.sensitivity_score < 0.0 || *p.sensitivity_score > 1.0)) {
      throw Error(ErrorKind::kFormat,
                  "sensitivity score outside [0,1] for " + p.id);
    }
    if (by_id_.contains(p.id)) return false;
    by_id_.emplace(p.id, products_.size());
    categories_.insert(p.main_category);
    products_.push_back(std::move(p));
    return true;
  }

  const Product* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &products_[it->second];
  }

  Product* find_mutable(std::string_view id) {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &products_[it->second];
  }

  const std::vector<Product>& products() const { return products_; }
  std::size_t size() const { return products_.size(); }
  bool empty() const { return products_.empty(); }

  // Distinct main_category values, lexicographically ordered.
  std::vector<std::string> category_universe() const {
    return {categories_.begin(), categories_.end()};
  }

 private:
  std::vector<Product> products_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::set<std::string> categories_;
};

// ---------------------------------------------------------------------------
// JSON mapping

inline nlohmann::json to_json(const Product& p) {
  nlohmann::json j;
  j["parent_asin"] = p.id;
  j["main_category"] = p.main_category;
  j["title"] = p.title;
  j["features"] = p.features;
  j["description"] = p.description;
  j["details"] = p.details;
  if (p.ground_truth_sensitive) j["ground_truth_sensitive"] = *p.ground_truth_sensitive;
  if (p.sensitivity_score) j["sensitivity_score"] = *p.sensitivity_score;
  return j;
}

namespace detail {

inline std::vector<std::string> string_or_list(const nlohmann::json& j,
                                               const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (it->is_string()) {
    out.push_back(it->get<std::string>());
  } else if (it->is_array()) {
    for (const auto& v : *it) {
      if (v.is_string()) out.push_back(v.get<std::string>());
      else if (!v.is_null()) out.push_back(v.dump());
    }
  } else {
    out.push_back(it->dump());
  }
  return out;
}

inline std::string optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->is_string() ? it->get<std::string>() : it->dump();
}

}  // namespace detail

// Builds a Product from one metadata record. Throws Error(kFormat) when the
// record has no usable title.
inline Product product_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kFormat, "record is not an object");
  auto title = j.find("title");
  if (title == j.end() || !title->is_string() ||
      detail::squash_whitespace(title->get<std::string>()).empty()) {
    throw Error(ErrorKind::kFormat, "record has no title");
  }
  Product p;
  p.title = title->get<std::string>();
  p.main_category = detail::optional_string(j, "main_category");
  p.features = detail::string_or_list(j, "features");
  p.description = detail::string_or_list(j, "description");
  if (auto d = j.find("details"); d != j.end() && d->is_object()) {
    for (const auto& [k, v] : d->items()) {
      p.details[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  p.id = detail::optional_string(j, "parent_asin");
  if (p.id.empty()) p.id = sha256_hex(canonical_text(p).text);
  if (auto g = j.find("ground_truth_sensitive"); g != j.end() && g->is_boolean()) {
    p.ground_truth_sensitive = g->get<bool>();
  }
  if (auto s = j.find("sensitivity_score"); s != j.end() && s->is_number()) {
    p.sensitivity_score = s->get<double>();
  }
  return p;
}

// ---------------------------------------------------------------------------
// Ingestion

struct IngestOptions {
  std::optional<std::size_t> max_records;
};

struct IngestResult {
  Catalog catalog;
  std::size_t skipped_malformed = 0;
  std::size_t duplicates = 0;
};

// Reads line-delimited metadata records. Blank lines are ignored; malformed
// lines are skipped and counted. Unknown keys are ignored.
inline IngestResult ingest_metadata(std::istream& in,
                                    const IngestOptions& options = {}) {
  if (!in.good()) throw Error(ErrorKind::kIo, "metadata stream is not readable");
  IngestResult result;
  std::string line;
  std::size_t accepted = 0;
  while (std::getline(in, line)) {
    if (options.max_records && accepted >= *options.max_records) break;
    if (detail::squash_whitespace(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      ++result.skipped_malformed;
      continue;
    }
    try {
      if (result.catalog.add(product_from_json(j))) {
        ++accepted;
      } else {
        ++result.duplicates;
      }
    } catch (const Error&) {
      ++result.skipped_malformed;
    }
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "error while reading metadata stream");
  if (result.catalog.empty()) {
    throw Error(ErrorKind::kEmptyCatalog, "no valid metadata records");
  }
  return result;
}

inline IngestResult ingest_metadata_file(const std::filesystem::path& path,
                                         const IngestOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ingest_metadata(in, options);
}

// Annotation files: one JSON object per line.
//   labels: {"product_id": ..., "label": "sensitive" | "nonsensitive"}
//   scores: {"product_id": ..., "score": <real in [0,1]>}
// Returns the number of records that did not resolve to a catalog product.
inline std::size_t apply_labels(Catalog& catalog, std::istream& in) {
  std::size_t unresolved = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::squash_whitespace(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("product_id") || !j.contains("label")) {
      throw Error(ErrorKind::kFormat, "malformed label record: " + line);
    }
    const auto label = j["label"].get<std::string>();
    if (label != "sensitive" && label != "nonsensitive") {
      throw Error(ErrorKind::kFormat, "unknown label '" + label + "'");
    }
    Product* p = catalog.find_mutable(j["product_id"].get<std::string>());
    if (p == nullptr) {
      ++unresolved;
      continue;
    }
    p->ground_truth_sensitive = (label == "sensitive");
  }
  return unresolved;
}

inline std::size_t apply_scores(Catalog& catalog, std::istream& in) {
  std::size_t unresolved = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::squash_whitespace(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("product_id") ||
        !j.contains("score") || !j["score"].is_number()) {
      throw Error(ErrorKind::kFormat, "malformed score record: " + line);
    }
    const double s = j["score"].get<double>();
    if (s < 0.0 || s > 1.0) {
      throw Error(ErrorKind::kFormat, "score outside [0,1]: " + line);
    }
    Product* p = catalog.find_mutable(j["product_id"].get<std::string>());
    if (p == nullptr) {
      ++unresolved;
      continue;
    }
    p->sensitivity_score = s;
  }
  return unresolved;
}

// ---------------------------------------------------------------------------
// Interactions and histories

struct Interaction {
  std::string user_id;
  std::string item_id;
  int64_t timestamp = 0;
};

struct InteractionReadResult {
  std::vector<Interaction> interactions;  // input order
  std::size_t skipped_malformed = 0;
};

// Reads {"user_id", "item_id" | "parent_asin", "timestamp"} records.
inline InteractionReadResult read_interactions(std::istream& in) {
  if (!in.good()) throw Error(ErrorKind::kIo, "interaction stream is not readable");
  InteractionReadResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::squash_whitespace(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++result.skipped_malformed;
      continue;
    }
    Interaction it;
    it.user_id = detail::optional_string(j, "user_id");
    it.item_id = detail::optional_string(j, "item_id");
    if (it.item_id.empty()) it.item_id = detail::optional_string(j, "parent_asin");
    auto ts = j.find("timestamp");
    bool ts_ok = ts != j.end() && ts->is_number_integer();
    if (ts_ok) it.timestamp = ts->get<int64_t>();
    if (it.user_id.empty() || it.item_id.empty() || !ts_ok) {
      ++result.skipped_malformed;
      continue;
    }
    result.interactions.push_back(std::move(it));
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "error while reading interactions");
  return result;
}

// Per-user item sequences in chronological order. Ties keep input order.
inline std::map<std::string, std::vector<std::string>> group_interactions(
    std::vector<Interaction> interactions) {
  std::stable_sort(interactions.begin(), interactions.end(),
                   [](const Interaction& a, const Interaction& b) {
                     return a.timestamp < b.timestamp;
                   });
  std::map<std::string, std::vector<std::string>> by_user;
  for (auto& it : interactions) by_user[it.user_id].push_back(std::move(it.item_id));
  return by_user;
}

struct HistoryOptions {
  std::size_t min_items = 30;
  std::size_t window = 20;
};

struct HistoryBuildResult {
  std::vector<PurchaseHistory> histories;  // ordered by user_id
  std::size_t dropped_unresolvable = 0;
  std::size_t excluded_users = 0;
};

// Keeps users with at least `min_items` resolvable interactions; of those the
// last `window` + 1 are used: the first `window` become the history and the
// final one the target.
inline HistoryBuildResult build_histories(
    const std::map<std::string, std::vector<std::string>>& sequences,
    const Catalog& catalog, const HistoryOptions& options = {}) {
  if (options.window == 0 || options.window >= options.min_items) {
    throw Error(ErrorKind::kConfig, "window must be in [1, min_items)");
  }
  HistoryBuildResult result;
  for (const auto& [user, ids] : sequences) {
    std::vector<const Product*> resolved;
    resolved.reserve(ids.size());
    for (const auto& id : ids) {
      if (const Product* p = catalog.find(id)) {
        resolved.push_back(p);
      } else {
        ++result.dropped_unresolvable;
      }
    }
    if (resolved.size() < options.min_items) {
      ++result.excluded_users;
      continue;
    }
    PurchaseHistory h;
    h.user_id = user;
    const std::size_t begin = resolved.size() - (options.window + 1);
    for (std::size_t i = begin; i + 1 < resolved.size(); ++i) {
      h.items.push_back(*resolved[i]);
    }
    h.target = *resolved.back();
    result.histories.push_back(std::move(h));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Archive: catalog plus histories in one JSON document.

inline constexpr std::string_view kArchiveFormat = "privrec-catalog";
inline constexpr int kArchiveVersion = 1;

struct CatalogArchive {
  Catalog catalog;
  std::vector<PurchaseHistory> histories;
  nlohmann::json stats = nlohmann::json::object();
};

inline nlohmann::json archive_to_json(const CatalogArchive& archive) {
  nlohmann::json j;
  j["format"] = kArchiveFormat;
  j["version"] = kArchiveVersion;
  j["category_universe"] = archive.catalog.category_universe();
  auto& products = j["products"] = nlohmann::json::array();
  for (const auto& p : archive.catalog.products()) products.push_back(to_json(p));
  auto& histories = j["histories"] = nlohmann::json::array();
  for (const auto& h : archive.histories) {
    nlohmann::json hj;
    hj["user_id"] = h.user_id;
    hj["items"] = nlohmann::json::array();
    for (const auto& p : h.items) hj["items"].push_back(p.id);
    hj["target"] = h.target.id;
    histories.push_back(std::move(hj));
  }
  j["stats"] = archive.stats;
  return j;
}

inline CatalogArchive archive_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kArchiveFormat) {
    throw Error(ErrorKind::kFormat, "not a catalog archive");
  }
  if (j.value("version", 0) != kArchiveVersion) {
    throw Error(ErrorKind::kFormat, "unsupported catalog archive version");
  }
  CatalogArchive archive;
  for (const auto& pj : j.at("products")) archive.catalog.add(product_from_json(pj));
  auto resolve = [&](const std::string& id) -> const Product& {
    const Product* p = archive.catalog.find(id);
    if (p == nullptr) throw Error(ErrorKind::kFormat, "archive references unknown product " + id);
    return *p;
  };
  for (const auto& hj : j.at("histories")) {
    PurchaseHistory h;
    h.user_id = hj.at("user_id").get<std::string>();
    for (const auto& id : hj.at("items")) h.items.push_back(resolve(id.get<std::string>()));
    h.target = resolve(hj.at("target").get<std::string>());
    archive.histories.push_back(std::move(h));
  }
  if (j.contains("stats")) archive.stats = j["stats"];
  return archive;
}

inline void write_archive(const std::filesystem::path& path,
                          const CatalogArchive& archive) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << archive_to_json(archive).dump(1) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

inline CatalogArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kFormat, "catalog archive is not valid JSON");
  return archive_from_json(j);
}

// Content hash of the catalog (products in archive order).
inline std::string catalog_hash(const Catalog& catalog) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : catalog.products()) j.push_back(to_json(p));
  return sha256_hex(j.dump());
}

}  // namespace privrec
