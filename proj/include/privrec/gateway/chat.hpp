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

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "privrec/catalog.hpp"
#include "privrec/error.hpp"
#include "privrec/gateway/parse.hpp"
#include "privrec/gateway/prompts.hpp"
#include "privrec/http.hpp"
#include "privrec/retrieval/embedding.hpp"
#include "privrec/retrieval/vector_index.hpp"

namespace privrec::gateway {

enum class BackendKind { kRemoteApi, kLocalEndpoint, kMockRetrieval, kMockScripted };

inline std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::kRemoteApi: return "remote_api";
    case BackendKind::kLocalEndpoint: return "local_endpoint";
    case BackendKind::kMockRetrieval: return "mock_retrieval";
    case BackendKind::kMockScripted: return "mock_scripted";
  }
  return "unknown";
}

inline bool is_network(BackendKind k) {
  return k == BackendKind::kRemoteApi || k == BackendKind::kLocalEndpoint;
}

inline constexpr std::string_view kDefaultAuthTokenEnv = "PRIVREC_API_KEY";

struct ChatBackendConfig {
  BackendKind kind = BackendKind::kMockScripted;
  std::string base_url;  // network kinds only
  std::string model_name;
  // Name of the environment variable holding the bearer token. The token
  // itself is never stored in configs, manifests or logs.
  std::string auth_token_env;
  double timeout_seconds = 60.0;
  std::size_t max_output_items = 50;
  double temperature = 0.0;

  // mock_scripted
  std::string scripted_response;
  double delay_seconds = 0.0;
  std::string fail_on_substring;  // transport error when the user prompt contains it

  // mock_retrieval
  bool same_category = false;

  void validate() const {
    if (is_network(kind) && base_url.empty()) {
      throw Error(ErrorKind::kConfig, std::string(to_string(kind)) + " backend needs base_url");
    }
    if (!is_network(kind) && !base_url.empty()) {
      throw Error(ErrorKind::kConfig, "mock backends must not set base_url");
    }
    if (max_output_items == 0) throw Error(ErrorKind::kConfig, "max_output_items must be positive");
    if (!(timeout_seconds > 0)) throw Error(ErrorKind::kConfig, "timeout must be positive");
    if (delay_seconds < 0) throw Error(ErrorKind::kConfig, "delay must be nonnegative");
  }
};

inline ChatBackendConfig backend_config_from_json(const nlohmann::json& j) {
  ChatBackendConfig c;
  const auto kind = j.value("kind", std::string("mock_scripted"));
  if (kind == "remote_api") c.kind = BackendKind::kRemoteApi;
  else if (kind == "local_endpoint") c.kind = BackendKind::kLocalEndpoint;
  else if (kind == "mock_retrieval") c.kind = BackendKind::kMockRetrieval;
  else if (kind == "mock_scripted") c.kind = BackendKind::kMockScripted;
  else throw Error(ErrorKind::kConfig, "unknown backend kind '" + kind + "'");
  c.base_url = j.value("base_url", std::string());
  c.model_name = j.value("model", std::string());
  c.auth_token_env = j.value("auth_token_env", std::string());
  c.timeout_seconds = j.value("timeout_seconds", 60.0);
  c.max_output_items = j.value("max_output_items", std::size_t{50});
  c.temperature = j.value("temperature", 0.0);
  c.scripted_response = j.value("response", std::string());
  c.delay_seconds = j.value("delay_seconds", 0.0);
  c.fail_on_substring = j.value("fail_on_substring", std::string());
  c.same_category = j.value("same_category", false);
  if (j.contains("auth_token")) {
    throw Error(ErrorKind::kConfig,
                "put the API token in an environment variable and name it with auth_token_env");
  }
  c.validate();
  return c;
}

// Identity recorded in manifests: no secrets.
inline nlohmann::json backend_identity(const ChatBackendConfig& c) {
  nlohmann::json j;
  j["kind"] = to_string(c.kind);
  if (is_network(c.kind)) {
    j["base_url"] = c.base_url;
    j["model"] = c.model_name;
    j["temperature"] = c.temperature;
  }
  if (c.kind == BackendKind::kMockRetrieval) j["same_category"] = c.same_category;
  if (c.kind == BackendKind::kMockScripted) j["response_sha256"] = sha256_hex(c.scripted_response);
  return j;
}

struct ChatResult {
  std::string text;
  double latency_seconds = 0.0;
};

// Shareable handle; concurrent complete() calls are allowed.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResult complete(const std::string& system, const std::string& user) = 0;
  virtual std::string identity() const = 0;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// POST {base_url}/v1/chat/completions in the common chat-completions shape.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(ChatBackendConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::string env = config_.auth_token_env.empty() ? std::string(kDefaultAuthTokenEnv)
                                                           : config_.auth_token_env;
    if (const char* token = std::getenv(env.c_str()); token != nullptr && *token != '\0') {
      token_ = token;
    }
  }

  ChatResult complete(const std::string& system, const std::string& user) override {
    nlohmann::json body;
    body["model"] = config_.model_name;
    body["messages"] = nlohmann::json::array();
    if (!system.empty()) body["messages"].push_back({{"role", "system"}, {"content", system}});
    body["messages"].push_back({{"role", "user"}, {"content", user}});
    body["temperature"] = config_.temperature;

    http::Options options;
    options.timeout_seconds = config_.timeout_seconds;
    options.bearer_token = token_;
    detail::Stopwatch watch;
    const auto response = http::post_json(config_.base_url, "/v1/chat/completions", body, options);
    ChatResult result;
    result.latency_seconds = watch.seconds();

    const auto choices = response.find("choices");
    if (choices == response.end() || !choices->is_array()) {
      throw Error(ErrorKind::kProtocol, "chat response has no choices array");
    }
    if (choices->empty()) throw Error(ErrorKind::kEmptyResponse, "chat response has no choices");
    const auto& first = (*choices)[0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
      throw Error(ErrorKind::kProtocol, "chat response choice lacks message.content");
    }
    result.text = first["message"]["content"].get<std::string>();
    if (privrec::detail::squash_whitespace(result.text).empty()) {
      throw Error(ErrorKind::kEmptyResponse, "chat response content is empty");
    }
    return result;
  }

  std::string identity() const override {
    return std::string(to_string(config_.kind)) + ":" + config_.model_name + "@" + config_.base_url;
  }

 private:
  ChatBackendConfig config_;
  std::optional<std::string> token_;
};

// Replays a fixture, optionally after a delay. A custom responder may compute
// the reply from the prompt.
class ScriptedChatClient final : public ChatClient {
 public:
  using Responder = std::function<std::string(const std::string& system, const std::string& user)>;

  explicit ScriptedChatClient(std::string response, double delay_seconds = 0.0,
                              std::string fail_on_substring = {})
      : responder_([r = std::move(response)](const std::string&, const std::string&) { return r; }),
        delay_(delay_seconds),
        fail_on_(std::move(fail_on_substring)) {}

  ScriptedChatClient(Responder responder, double delay_seconds)
      : responder_(std::move(responder)), delay_(delay_seconds) {}

  ChatResult complete(const std::string& system, const std::string& user) override {
    detail::Stopwatch watch;
    if (delay_ > 0) std::this_thread::sleep_for(std::chrono::duration<double>(delay_));
    if (!fail_on_.empty() && user.find(fail_on_) != std::string::npos) {
      throw Error(ErrorKind::kTransport, "scripted transport failure", /*retry_safe=*/true);
    }
    ChatResult r;
    r.text = responder_(system, user);
    r.latency_seconds = watch.seconds();
    if (privrec::detail::squash_whitespace(r.text).empty()) {
      throw Error(ErrorKind::kEmptyResponse, "scripted response is empty");
    }
    return r;
  }

  std::string identity() const override { return "mock_scripted"; }

 private:
  Responder responder_;
  double delay_ = 0.0;
  std::string fail_on_;
};

// Content-aware offline recommender. It reads the numbered purchase history
// out of the prompt, maps every line to its nearest catalog product, and then
// fills the requested number of slots round-robin from the most recent
// history item backwards, each slot taking that item's nearest catalog
// neighbour not yet used and not already in the history. With
// `same_category`, neighbours are restricted to the source item's category.
// Each recommendation is emitted as the product's one-line canonical text.
class RetrievalChatClient final : public ChatClient {
 public:
  RetrievalChatClient(std::shared_ptr<const Catalog> catalog,
                      std::shared_ptr<const retrieval::VectorIndex> index,
                      std::shared_ptr<const retrieval::EmbeddingProvider> provider,
                      bool same_category, std::size_t default_count = 10)
      : catalog_(std::move(catalog)),
        index_(std::move(index)),
        provider_(std::move(provider)),
        same_category_(same_category),
        default_count_(default_count) {}

  ChatResult complete(const std::string& /*system*/, const std::string& user) override {
    detail::Stopwatch watch;
    const std::size_t count = requested_count(user);
    const auto history = history_lines(user);
    if (history.empty()) throw Error(ErrorKind::kEmptyResponse, "prompt has no purchase history");

    const auto embeddings = provider_->embed(history);
    std::vector<retrieval::Neighbor> sources;
    std::unordered_set<std::string> used;
    for (const auto& e : embeddings) {
      auto top = index_->nearest(e, 1);
      used.insert(top.front().product_id);
      sources.push_back(std::move(top.front()));
    }

    std::vector<std::string> picks;
    std::size_t stalled = 0;
    for (std::size_t slot = 0; picks.size() < count && stalled < embeddings.size(); ++slot) {
      const std::size_t j = embeddings.size() - 1 - (slot % embeddings.size());
      const auto& src = sources[j];
      auto next = index_->nearest_if(embeddings[j], 1, [&](const retrieval::IndexRow& row) {
        return !used.contains(row.product_id) &&
               (!same_category_ || row.main_category == src.main_category);
      });
      if (next.empty()) {
        ++stalled;
        continue;
      }
      stalled = 0;
      used.insert(next.front().product_id);
      const Product* p = catalog_->find(next.front().product_id);
      picks.push_back(p != nullptr ? canonical_text(*p).text : next.front().product_id);
    }
    if (picks.empty()) throw Error(ErrorKind::kEmptyResponse, "no catalog neighbours available");

    ChatResult r;
    r.text = format_numbered_list(picks);
    r.latency_seconds = watch.seconds();
    return r;
  }

  std::string identity() const override {
    return same_category_ ? "mock_retrieval(same_category)" : "mock_retrieval";
  }

 private:
  std::size_t requested_count(const std::string& user) const {
    static const std::regex kCount(R"((recommend|suggest only)\s+(\d+))");
    std::smatch m;
    if (std::regex_search(user, m, kCount)) return std::stoul(m[2].str());
    return default_count_;
  }

  static std::vector<std::string> history_lines(const std::string& user) {
    static constexpr std::string_view kMarker = "User's purchase history:";
    const auto at = user.rfind(kMarker);
    const std::string_view tail =
        at == std::string::npos ? std::string_view(user)
                                : std::string_view(user).substr(at + kMarker.size());
    std::vector<std::string> out;
    try {
      for (auto& e : parse_numbered_list(tail, 0).entries) out.push_back(std::move(e.text));
    } catch (const ParseError&) {
    }
    return out;
  }

  std::shared_ptr<const Catalog> catalog_;
  std::shared_ptr<const retrieval::VectorIndex> index_;
  std::shared_ptr<const retrieval::EmbeddingProvider> provider_;
  bool same_category_;
  std::size_t default_count_;
};

// Decorator that keeps a copy of every request it forwards.
class RecordingChatClient final : public ChatClient {
 public:
  struct Request {
    std::string system;
    std::string user;
  };

  explicit RecordingChatClient(std::shared_ptr<ChatClient> inner) : inner_(std::move(inner)) {}

  ChatResult complete(const std::string& system, const std::string& user) override {
    {
      std::lock_guard lock(mu_);
      requests_.push_back({system, user});
    }
    return inner_->complete(system, user);
  }

  std::string identity() const override { return inner_->identity(); }

  std::vector<Request> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

  void clear() {
    std::lock_guard lock(mu_);
    requests_.clear();
  }

 private:
  std::shared_ptr<ChatClient> inner_;
  mutable std::mutex mu_;
  std::vector<Request> requests_;
};

struct RetrievalContext {
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<const retrieval::VectorIndex> index;
  std::shared_ptr<const retrieval::EmbeddingProvider> provider;
};

inline std::shared_ptr<ChatClient> make_chat_client(const ChatBackendConfig& config,
                                                    const RetrievalContext& context = {}) {
  config.validate();
  switch (config.kind) {
    case BackendKind::kRemoteApi:
    case BackendKind::kLocalEndpoint:
      return std::make_shared<HttpChatClient>(config);
    case BackendKind::kMockScripted:
      return std::make_shared<ScriptedChatClient>(config.scripted_response, config.delay_seconds,
                                                  config.fail_on_substring);
    case BackendKind::kMockRetrieval:
      if (!context.catalog || !context.index || !context.provider) {
        throw Error(ErrorKind::kConfig, "mock_retrieval backend needs a catalog, index and provider");
      }
      return std::make_shared<RetrievalChatClient>(context.catalog, context.index,
                                                   context.provider, config.same_category);
  }
  throw Error(ErrorKind::kConfig, "unknown backend kind");
}

// Labels one product with the few-shot classification prompt.
inline bool assign_label_via_llm(ChatClient& client, const ProductText& product) {
  const std::string prompt = std::string(kSensitivityLabelPrompt) + "\n" + product.text;
  return parse_sensitivity_label(client.complete("", prompt).text);
}

// Scores one product with the few-shot sensitivity-score prompt.
inline double assign_score_via_llm(ChatClient& client, const ProductText& product) {
  const std::string prompt = std::string(kSensitivityScorePrompt) + "\n" + product.text;
  return parse_sensitivity_score(client.complete("", prompt).text);
}

}  // namespace privrec::gateway
