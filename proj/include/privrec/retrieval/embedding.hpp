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
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "privrec/error.hpp"
#include "privrec/hash.hpp"
#include "privrec/http.hpp"

namespace privrec::retrieval {

inline constexpr std::size_t kReferenceDimension = 384;

struct Embedding {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  friend bool operator==(const Embedding&, const Embedding&) = default;
};

inline double norm(const Embedding& e) {
  double s = 0.0;
  for (double v : e.values) s += v * v;
  return std::sqrt(s);
}

// u.v / (|u| |v|). Zero vectors have no defined similarity.
inline double cosine(const Embedding& u, const Embedding& v) {
  if (u.dimension() != v.dimension()) {
    throw Error(ErrorKind::kShape, "cosine: dimension mismatch");
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    dot += u.values[i] * v.values[i];
    uu += u.values[i] * u.values[i];
    vv += v.values[i] * v.values[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorKind::kUndefined, "cosine: zero vector");
  const double c = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

enum class ProviderKind { kDeterministicHash, kRemoteEndpoint };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::kDeterministicHash;
  std::size_t dimension = kReferenceDimension;
  std::string endpoint;  // remote only
  double timeout_seconds = 30.0;
};

inline nlohmann::json to_json(const ProviderConfig& c) {
  nlohmann::json j;
  j["kind"] = c.kind == ProviderKind::kDeterministicHash ? "deterministic_hash" : "remote_endpoint";
  j["dimension"] = c.dimension;
  if (c.kind == ProviderKind::kRemoteEndpoint) j["endpoint"] = c.endpoint;
  return j;
}

inline ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  ProviderConfig c;
  const auto kind = j.value("kind", std::string("deterministic_hash"));
  if (kind == "deterministic_hash") c.kind = ProviderKind::kDeterministicHash;
  else if (kind == "remote_endpoint") c.kind = ProviderKind::kRemoteEndpoint;
  else throw Error(ErrorKind::kConfig, "unknown embedding provider kind '" + kind + "'");
  c.dimension = j.value("dimension", kReferenceDimension);
  c.endpoint = j.value("endpoint", std::string());
  c.timeout_seconds = j.value("timeout_seconds", 30.0);
  if (c.dimension == 0) throw Error(ErrorKind::kConfig, "embedding dimension must be positive");
  if (c.kind == ProviderKind::kRemoteEndpoint && c.endpoint.empty()) {
    throw Error(ErrorKind::kConfig, "remote embedding provider needs an endpoint");
  }
  return c;
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual ProviderConfig config() const = 0;
  // Order-preserving.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) const = 0;

  Embedding embed_one(const std::string& text) const {
    return embed(std::span(&text, 1)).front();
  }
};

// Signed feature hashing of character 3-grams, then L2 normalisation.
// Text is lowercased and whitespace-squashed; "^^" and "$$" pad the ends so
// that even the empty string has n-grams.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dimension = kReferenceDimension)
      : dimension_(dimension) {
    if (dimension_ == 0) throw Error(ErrorKind::kConfig, "embedding dimension must be positive");
  }

  std::size_t dimension() const override { return dimension_; }
  ProviderConfig config() const override {
    return {ProviderKind::kDeterministicHash, dimension_, {}, 0.0};
  }

  std::vector<Embedding> embed(std::span<const std::string> texts) const override {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_text(t));
    return out;
  }

  Embedding embed_text(std::string_view text) const {
    std::string s = "^^";
    bool space = false;
    for (char c : text) {
      const auto uc = static_cast<unsigned char>(c);
      if (std::isspace(uc)) {
        space = s.size() > 2;
        continue;
      }
      if (space) s.push_back(' ');
      space = false;
      s.push_back(static_cast<char>(std::tolower(uc)));
    }
    s += "$$";

    Embedding e;
    e.values.assign(dimension_, 0.0);
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
      const uint64_t h = mix64(fnv1a64(std::string_view(s).substr(i, 3)));
      const std::size_t bucket = h % dimension_;
      e.values[bucket] += (h >> 63) ? -1.0 : 1.0;
    }
    const double n = norm(e);
    if (n > 0.0) {
      for (double& v : e.values) v /= n;
    }
    return e;
  }

 private:
  std::size_t dimension_;
};

// Client for POST {endpoint}/embed {"texts": [...]} -> {"embeddings": [[...]]}.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(std::string endpoint, std::size_t dimension,
                          double timeout_seconds = 30.0)
      : endpoint_(std::move(endpoint)), dimension_(dimension), timeout_(timeout_seconds) {}

  std::size_t dimension() const override { return dimension_; }
  ProviderConfig config() const override {
    return {ProviderKind::kRemoteEndpoint, dimension_, endpoint_, timeout_};
  }

  std::vector<Embedding> embed(std::span<const std::string> texts) const override {
    if (texts.empty()) return {};
    nlohmann::json body;
    body["texts"] = texts;
    http::Options options;
    options.timeout_seconds = timeout_;
    const auto response = http::post_json(endpoint_, "/embed", body, options);
    const auto it = response.find("embeddings");
    if (it == response.end() || !it->is_array() || it->size() != texts.size()) {
      throw Error(ErrorKind::kProtocol, "/embed response lacks an aligned embeddings array");
    }
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& row : *it) {
      if (!row.is_array() || row.size() != dimension_) {
        throw Error(ErrorKind::kProtocol, "/embed returned a vector of the wrong dimension");
      }
      Embedding e;
      e.values.reserve(dimension_);
      for (const auto& v : row) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
          throw Error(ErrorKind::kProtocol, "/embed returned a non-finite value");
        }
        e.values.push_back(v.get<double>());
      }
      out.push_back(std::move(e));
    }
    return out;
  }

 private:
  std::string endpoint_;
  std::size_t dimension_;
  double timeout_;
};

inline std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& c) {
  if (c.kind == ProviderKind::kRemoteEndpoint) {
    return std::make_unique<RemoteEmbeddingProvider>(c.endpoint, c.dimension, c.timeout_seconds);
  }
  return std::make_unique<HashEmbeddingProvider>(c.dimension);
}

}  // namespace privrec::retrieval
