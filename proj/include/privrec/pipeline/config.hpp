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

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "privrec/error.hpp"
#include "privrec/gateway/chat.hpp"
#include "privrec/hash.hpp"
#include "privrec/retrieval/embedding.hpp"
#include "privrec/sensitivity/scorer.hpp"

namespace privrec::pipeline {

enum class Scheme {
  kBaseline,
  kOnlyLocal,
  kCatObfOnly,
  kCatObfDeobf,
  kBertObfOnly,
  kBertObfDeobf,
};

// Canonical report order.
inline constexpr std::array<Scheme, 6> kAllSchemes = {
    Scheme::kBaseline,   Scheme::kOnlyLocal,   Scheme::kCatObfOnly,
    Scheme::kCatObfDeobf, Scheme::kBertObfOnly, Scheme::kBertObfDeobf};

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::kBaseline: return "baseline";
    case Scheme::kOnlyLocal: return "only_local";
    case Scheme::kCatObfOnly: return "cat_obf_only";
    case Scheme::kCatObfDeobf: return "cat_obf_deobf";
    case Scheme::kBertObfOnly: return "bert_obf_only";
    case Scheme::kBertObfDeobf: return "bert_obf_deobf";
  }
  return "unknown";
}

inline std::string_view display_name(Scheme s) {
  switch (s) {
    case Scheme::kBaseline: return "Baseline (R)";
    case Scheme::kOnlyLocal: return "Only Local";
    case Scheme::kCatObfOnly: return "Categorical Obf Only (R')";
    case Scheme::kCatObfDeobf: return "Categorical Obf + Deobf (R'')";
    case Scheme::kBertObfOnly: return "BERT Obf Only (R')";
    case Scheme::kBertObfDeobf: return "BERT Obf + Deobf (R'')";
  }
  return "unknown";
}

inline Scheme scheme_from_string(std::string_view name) {
  for (Scheme s : kAllSchemes) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorKind::kConfig, "unknown scheme '" + std::string(name) + "'");
}

inline std::size_t scheme_rank(Scheme s) {
  for (std::size_t i = 0; i < kAllSchemes.size(); ++i) {
    if (kAllSchemes[i] == s) return i;
  }
  return kAllSchemes.size();
}

inline bool uses_obfuscator(Scheme s) {
  return s == Scheme::kCatObfOnly || s == Scheme::kCatObfDeobf || s == Scheme::kBertObfOnly ||
         s == Scheme::kBertObfDeobf;
}

inline bool uses_local_leg(Scheme s) {
  return s == Scheme::kOnlyLocal || s == Scheme::kCatObfDeobf || s == Scheme::kBertObfDeobf;
}

inline bool uses_server_leg(Scheme s) { return s != Scheme::kOnlyLocal; }

inline bool is_categorical(Scheme s) {
  return s == Scheme::kCatObfOnly || s == Scheme::kCatObfDeobf;
}

// Failure cap: the run fails when more than this fraction of users fail.
inline constexpr double kDefaultFailureCap = 0.05;

struct ExperimentConfig {
  std::string run_id;
  Scheme scheme = Scheme::kBaseline;
  std::size_t n_total = 10;
  std::optional<sensitivity::ScorerConfig> scorer;
  std::optional<gateway::ChatBackendConfig> server_backend;
  std::optional<gateway::ChatBackendConfig> local_backend;
  std::optional<retrieval::ProviderConfig> embedding;  // defaults to hash at the index dimension
  uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::optional<std::string> query;  // user query Q, prepended to recommendation prompts
  std::size_t reprompt_retries = 0;
  double failure_cap = kDefaultFailureCap;

  void validate() const {
    if (n_total < 1) throw Error(ErrorKind::kConfig, "n_total must be >= 1");
    if (parallelism < 1) throw Error(ErrorKind::kConfig, "parallelism must be >= 1");
    if (!(failure_cap >= 0.0 && failure_cap <= 1.0)) {
      throw Error(ErrorKind::kConfig, "failure_cap must lie in [0,1]");
    }
    if (uses_server_leg(scheme) && !server_backend) {
      throw Error(ErrorKind::kConfig, std::string(to_string(scheme)) + " needs server_backend");
    }
    if (uses_local_leg(scheme) && !local_backend) {
      throw Error(ErrorKind::kConfig, std::string(to_string(scheme)) + " needs local_backend");
    }
    if (uses_obfuscator(scheme)) {
      if (!scorer) throw Error(ErrorKind::kConfig, std::string(to_string(scheme)) + " needs a scorer");
      const bool categorical = scorer->kind == sensitivity::ScorerKind::kCategorical;
      if (is_categorical(scheme) != categorical) {
        throw Error(ErrorKind::kConfig, is_categorical(scheme)
                                            ? "categorical schemes need a categorical scorer"
                                            : "context-aware schemes need a trained or remote scorer");
      }
      scorer->validate();
    }
    if (server_backend) server_backend->validate();
    if (local_backend) local_backend->validate();
  }
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "run config must be an object");
  ExperimentConfig c;
  try {
    c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    c.run_id = j.value("run_id", std::string(to_string(c.scheme)));
    c.n_total = j.value("n_total", std::size_t{10});
    if (j.contains("scorer")) c.scorer = sensitivity::scorer_config_from_json(j["scorer"]);
    if (j.contains("server_backend")) {
      c.server_backend = gateway::backend_config_from_json(j["server_backend"]);
    }
    if (j.contains("local_backend")) {
      c.local_backend = gateway::backend_config_from_json(j["local_backend"]);
    }
    if (j.contains("embedding")) c.embedding = retrieval::provider_config_from_json(j["embedding"]);
    c.seed = j.value("seed", uint64_t{0});
    c.parallelism = j.value("parallelism", std::size_t{1});
    if (j.contains("query") && j["query"].is_string()) c.query = j["query"].get<std::string>();
    c.reprompt_retries = j.value("reprompt_retries", std::size_t{0});
    c.failure_cap = j.value("failure_cap", kDefaultFailureCap);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open run config " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kConfig, "run config is not valid JSON");
  return experiment_config_from_json(j);
}

// Secret-free description of the configuration; its hash identifies the run.
inline nlohmann::json config_identity(const ExperimentConfig& c) {
  nlohmann::json j;
  j["run_id"] = c.run_id;
  j["scheme"] = to_string(c.scheme);
  j["n_total"] = c.n_total;
  j["seed"] = c.seed;
  j["reprompt_retries"] = c.reprompt_retries;
  j["failure_cap"] = c.failure_cap;
  j["query"] = c.query ? nlohmann::json(*c.query) : nlohmann::json(nullptr);
  j["scorer"] = c.scorer ? sensitivity::to_json(*c.scorer) : nlohmann::json(nullptr);
  if (c.scorer && c.scorer->kind == sensitivity::ScorerKind::kTrained) {
    // Identify the model by content so that relocating the file keeps the hash.
    std::ifstream in(c.scorer->model_path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    j["scorer"].erase("model_path");
    j["scorer"]["model_sha256"] = in ? sha256_hex(bytes.str()) : std::string("unreadable");
  }
  j["server_backend"] =
      c.server_backend ? gateway::backend_identity(*c.server_backend) : nlohmann::json(nullptr);
  j["local_backend"] =
      c.local_backend ? gateway::backend_identity(*c.local_backend) : nlohmann::json(nullptr);
  j["embedding"] = c.embedding ? retrieval::to_json(*c.embedding) : nlohmann::json(nullptr);
  return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
  return sha256_hex(config_identity(c).dump());
}

}  // namespace privrec::pipeline
