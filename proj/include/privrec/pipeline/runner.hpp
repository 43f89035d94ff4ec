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
#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "privrec/catalog.hpp"
#include "privrec/error.hpp"
#include "privrec/gateway/chat.hpp"
#include "privrec/gateway/parse.hpp"
#include "privrec/gateway/prompts.hpp"
#include "privrec/pipeline/allocation.hpp"
#include "privrec/pipeline/config.hpp"
#include "privrec/retrieval/embedding.hpp"
#include "privrec/retrieval/vector_index.hpp"
#include "privrec/sensitivity/scorer.hpp"

namespace privrec::pipeline {

enum class Provenance { kServer, kLocal };

inline std::string_view to_string(Provenance p) {
  return p == Provenance::kServer ? "server" : "local";
}

inline Provenance provenance_from_string(std::string_view s) {
  if (s == "server") return Provenance::kServer;
  if (s == "local") return Provenance::kLocal;
  throw Error(ErrorKind::kFormat, "unknown provenance '" + std::string(s) + "'");
}

struct RecommendationSet {
  std::vector<gateway::RecommendationEntry> entries;
  Provenance provenance = Provenance::kServer;
  std::string raw_response;
  double latency_seconds = 0.0;
  std::size_t requested = 0;
  std::size_t shortfall = 0;
  std::size_t attempts = 0;
};

struct FinalEntry {
  std::size_t rank = 0;
  std::string text;
  Provenance provenance = Provenance::kServer;
  retrieval::Neighbor resolved;
};

// Per history item: what the scorer said and whether the item reached the
// server.
struct Exposure {
  std::string product_id;
  std::string main_category;
  bool flagged = false;
  bool shared = false;
  std::optional<bool> ground_truth_sensitive;
  std::optional<double> sensitivity_score;
};

struct TargetInfo {
  std::string product_id;
  std::string main_category;
  std::string text;
};

struct Timings {
  double t_obf = 0.0;
  double t_rec = 0.0;
  double t_deobf = 0.0;
  double t_total_extra = 0.0;
  double wall = 0.0;
};

// One prompt as sent, with the raw reply.
struct AuditEntry {
  std::string user_id;
  std::string system;
  std::string user;
  std::string response;
};

struct UserRunRecord {
  std::string user_id;
  bool ok = true;
  std::string error_kind;
  std::string error_message;
  std::vector<sensitivity::SensitivityVerdict> verdicts;
  Allocation allocation;
  std::optional<RecommendationSet> r_ns;
  std::optional<RecommendationSet> r_s;
  std::vector<FinalEntry> final_entries;
  std::size_t shortfall = 0;
  std::vector<Exposure> exposure;
  TargetInfo target;
  Timings timings;
  std::optional<AuditEntry> server_audit;
  std::optional<AuditEntry> local_audit;
};

// Shared, read-only state for a run. The chat clients are shareable handles.
struct RunResources {
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<const retrieval::VectorIndex> index;
  std::shared_ptr<const retrieval::EmbeddingProvider> provider;
  std::shared_ptr<const sensitivity::SensitivityScorer> scorer;
  std::shared_ptr<gateway::ChatClient> server;
  std::shared_ptr<gateway::ChatClient> local;
};

inline RunResources make_resources(const ExperimentConfig& cfg, std::shared_ptr<const Catalog> catalog,
                                   std::shared_ptr<const retrieval::VectorIndex> index,
                                   std::shared_ptr<const retrieval::EmbeddingProvider> provider) {
  cfg.validate();
  RunResources r{std::move(catalog), std::move(index), std::move(provider), nullptr, nullptr, nullptr};
  const gateway::RetrievalContext ctx{r.catalog, r.index, r.provider};
  if (uses_obfuscator(cfg.scheme)) r.scorer = sensitivity::make_scorer(*cfg.scorer);
  if (uses_server_leg(cfg.scheme)) r.server = gateway::make_chat_client(*cfg.server_backend, ctx);
  if (uses_local_leg(cfg.scheme)) r.local = gateway::make_chat_client(*cfg.local_backend, ctx);
  return r;
}

namespace detail {

inline std::vector<ProductText> texts_of(std::span<const Product> items) {
  std::vector<ProductText> out;
  out.reserve(items.size());
  for (const auto& p : items) out.push_back(canonical_text(p));
  return out;
}

struct LegOutcome {
  RecommendationSet set;
  AuditEntry audit;
};

// One recommender call, re-prompted up to `retries` extra times on a parse
// failure or a short list. The longest list wins.
inline LegOutcome run_leg(gateway::ChatClient& client, const gateway::PromptTemplate& t,
                          std::size_t count, std::span<const Product> items, Provenance provenance,
                          const ExperimentConfig& cfg, const std::string& user_id) {
  const auto texts = texts_of(items);
  auto prompt = gateway::render_prompt(t, count, texts);
  if (cfg.query) prompt.user = "User query: " + *cfg.query + "\n\n" + prompt.user;

  LegOutcome out;
  out.audit = {user_id, prompt.system, prompt.user, {}};
  out.set.provenance = provenance;
  out.set.requested = count;
  std::optional<ParseError> last_parse_error;
  bool have = false;
  for (std::size_t attempt = 0; attempt <= cfg.reprompt_retries; ++attempt) {
    const auto reply = client.complete(prompt.system, prompt.user);
    out.set.latency_seconds += reply.latency_seconds;
    out.set.attempts = attempt + 1;
    try {
      auto parsed = gateway::parse_numbered_list(reply.text, count);
      if (parsed.entries.size() > count) parsed.entries.resize(count);
      if (!have || parsed.entries.size() > out.set.entries.size()) {
        out.set.entries = std::move(parsed.entries);
        out.set.raw_response = reply.text;
        out.audit.response = reply.text;
        have = true;
      }
    } catch (const ParseError& e) {
      last_parse_error = e;
      if (!have) out.audit.response = reply.text;
    }
    if (have && out.set.entries.size() == count) break;
  }
  if (!have) throw *last_parse_error;
  out.set.shortfall = count - out.set.entries.size();
  return out;
}

}  // namespace detail

// Runs one user through the configured scheme.
//
// Backend, parse and retrieval failures mark the record failed. A privacy
// violation (a flagged item about to be sent to the server) is a bug and is
// rethrown.
inline UserRunRecord run_user(const ExperimentConfig& cfg, const RunResources& res,
                              const PurchaseHistory& h) {
  gateway::detail::Stopwatch wall;
  UserRunRecord rec;
  rec.user_id = h.user_id;
  rec.target = {h.target.id, h.target.main_category, canonical_text(h.target).text};
  for (const auto& p : h.items) {
    rec.exposure.push_back({p.id, p.main_category, false, false, p.ground_truth_sensitive,
                            p.sensitivity_score});
  }
  try {
    if (h.items.empty()) throw Error(ErrorKind::kConfig, "history is empty");

    // (a) split
    std::vector<Product> server_items;
    std::vector<Product> local_items;
    if (cfg.scheme == Scheme::kBaseline) {
      server_items = h.items;
      rec.allocation = {cfg.n_total, 0};
    } else if (cfg.scheme == Scheme::kOnlyLocal) {
      local_items = h.items;
      rec.allocation = {0, cfg.n_total};
    } else {
      gateway::detail::Stopwatch obf;
      auto split = sensitivity::split_history(h, *res.scorer);
      rec.timings.t_obf = obf.seconds();
      rec.verdicts = std::move(split.verdicts);
      for (std::size_t i = 0; i < rec.verdicts.size(); ++i) {
        rec.exposure[i].flagged = rec.verdicts[i].is_sensitive;
      }
      // (b) allocate
      rec.allocation = allocate(cfg.n_total, split.sensitive.size(), split.nonsensitive.size());
      server_items = std::move(split.nonsensitive);
      local_items = std::move(split.sensitive);
    }

    const bool do_server = res.server && rec.allocation.n_ns > 0 && !server_items.empty();
    const bool do_local = res.local && rec.allocation.n_s > 0 && !local_items.empty();

    if (do_server && uses_obfuscator(cfg.scheme)) {
      std::set<std::string> flagged;
      for (const auto& v : rec.verdicts) {
        if (v.is_sensitive) flagged.insert(v.product_id);
      }
      for (const auto& p : server_items) {
        if (flagged.contains(p.id)) {
          throw Error(ErrorKind::kPrivacy, "flagged product " + p.id + " routed to the server");
        }
      }
    }

    // (c, d) both legs, concurrently
    std::future<detail::LegOutcome> local_future;
    if (do_local) {
      local_future = std::async(std::launch::async, [&] {
        return detail::run_leg(*res.local, gateway::local_recommendation_template(),
                               rec.allocation.n_s, local_items, Provenance::kLocal, cfg, h.user_id);
      });
    }
    std::optional<detail::LegOutcome> server_out;
    std::exception_ptr server_error;
    if (do_server) {
      try {
        server_out = detail::run_leg(*res.server, gateway::server_recommendation_template(),
                                     rec.allocation.n_ns, server_items, Provenance::kServer, cfg,
                                     h.user_id);
      } catch (...) {
        server_error = std::current_exception();
      }
      std::set<std::string> sent;
      for (const auto& p : server_items) sent.insert(p.id);
      for (auto& e : rec.exposure) e.shared = sent.contains(e.product_id);
    }
    std::optional<detail::LegOutcome> local_out;
    if (do_local) local_out = local_future.get();
    if (server_error) std::rethrow_exception(server_error);

    if (server_out) {
      rec.server_audit = std::move(server_out->audit);
      rec.r_ns = std::move(server_out->set);
      rec.timings.t_rec = rec.r_ns->latency_seconds;
    }
    if (local_out) {
      rec.local_audit = std::move(local_out->audit);
      rec.r_s = std::move(local_out->set);
      rec.timings.t_deobf = rec.r_s->latency_seconds;
    }

    // (e) merge: server entries, then local entries
    for (const auto* set : {rec.r_ns ? &*rec.r_ns : nullptr, rec.r_s ? &*rec.r_s : nullptr}) {
      if (set == nullptr) continue;
      for (const auto& e : set->entries) {
        rec.final_entries.push_back({rec.final_entries.size() + 1, e.text, set->provenance, {}});
      }
    }
    rec.shortfall = cfg.n_total - rec.final_entries.size();

    // (f) resolve to catalog products
    if (!rec.final_entries.empty()) {
      std::vector<std::string> texts;
      for (const auto& e : rec.final_entries) texts.push_back(e.text);
      const auto embeddings = res.provider->embed(texts);
      for (std::size_t i = 0; i < embeddings.size(); ++i) {
        auto top = res.index->nearest(embeddings[i], 1);
        if (top.empty()) throw Error(ErrorKind::kUndefined, "recommendation did not resolve");
        rec.final_entries[i].resolved = std::move(top.front());
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kPrivacy) throw;
    rec.ok = false;
    rec.error_kind = std::string(to_string(e.kind()));
    rec.error_message = e.what();
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error_kind = "internal";
    rec.error_message = e.what();
  }
  // (g) timing
  rec.timings.t_total_extra = timing_extra(rec.timings.t_obf, rec.timings.t_rec, rec.timings.t_deobf);
  rec.timings.wall = wall.seconds();
  return rec;
}

struct RunResult {
  std::vector<UserRunRecord> records;  // sorted by user_id
  nlohmann::json manifest;
  std::size_t failed = 0;
  bool cap_exceeded = false;
  std::string dominant_error;  // most frequent error kind among failures
};

inline nlohmann::json build_manifest(const ExperimentConfig& cfg, const RunResources& res,
                                     const std::vector<UserRunRecord>& records) {
  nlohmann::json m;
  m["format"] = "privrec-run";
  m["version"] = 1;
  m["run_id"] = cfg.run_id;
  m["scheme"] = to_string(cfg.scheme);
  m["config"] = config_identity(cfg);
  m["config_hash"] = config_hash(cfg);
  m["seed"] = cfg.seed;
  m["n_total"] = cfg.n_total;
  m["prompt_version"] = gateway::kPromptVersion;
  m["server_backend"] = res.server ? nlohmann::json(res.server->identity()) : nlohmann::json(nullptr);
  m["local_backend"] = res.local ? nlohmann::json(res.local->identity()) : nlohmann::json(nullptr);
  m["scorer"] = res.scorer ? nlohmann::json(res.scorer->identity()) : nlohmann::json(nullptr);
  m["catalog_hash"] = catalog_hash(*res.catalog);
  m["category_universe"] = res.catalog->category_universe();
  m["sensitive_categories"] = cfg.scorer && !cfg.scorer->sensitive_categories.empty()
                                  ? cfg.scorer->sensitive_categories
                                  : sensitivity::default_sensitive_categories();
  m["embedding"] = retrieval::to_json(res.provider->config());
  m["retrieval_corpus"] = "full_catalog";
  m["index_rows"] = res.index->size();
  std::size_t failed = 0;
  bool sensitive_payloads = false;
  for (const auto& r : records) {
    if (!r.ok) ++failed;
    if (r.local_audit) sensitive_payloads = true;
    for (const auto& e : r.exposure) {
      if (e.shared && (e.flagged || e.ground_truth_sensitive.value_or(false))) {
        sensitive_payloads = true;
      }
    }
  }
  m["users"] = records.size();
  m["failed_users"] = failed;
  m["failure_cap"] = cfg.failure_cap;
  m["contains_sensitive_payloads"] = sensitive_payloads;
  return m;
}

// Processes every history on a bounded worker pool. The processing order is
// a seeded shuffle; the emitted order is always by user_id.
inline RunResult run_experiment(const ExperimentConfig& cfg, const RunResources& res,
                                const std::vector<PurchaseHistory>& histories,
                                std::size_t parallelism) {
  if (histories.empty()) throw Error(ErrorKind::kConfig, "run_experiment: no histories");
  if (parallelism < 1) throw Error(ErrorKind::kConfig, "parallelism must be >= 1");

  std::vector<std::size_t> order(histories.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<UserRunRecord> records(histories.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr fatal;
  auto worker = [&] {
    for (std::size_t i = next++; i < order.size(); i = next++) {
      try {
        records[order[i]] = run_user(cfg, res, histories[order[i]]);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!fatal) fatal = std::current_exception();
        next = order.size();
      }
    }
  };
  const std::size_t n_workers = std::min(parallelism, histories.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.user_id < b.user_id; });

  RunResult result;
  std::map<std::string, std::size_t> kinds;
  for (const auto& r : records) {
    if (!r.ok) {
      ++result.failed;
      ++kinds[r.error_kind];
    }
  }
  std::size_t best = 0;
  for (const auto& [kind, n] : kinds) {
    if (n > best) {
      best = n;
      result.dominant_error = kind;
    }
  }
  result.cap_exceeded =
      static_cast<double>(result.failed) > cfg.failure_cap * static_cast<double>(records.size());
  result.manifest = build_manifest(cfg, res, records);
  result.records = std::move(records);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const RecommendationSet& s) {
  nlohmann::json j;
  j["provenance"] = to_string(s.provenance);
  j["requested"] = s.requested;
  j["shortfall"] = s.shortfall;
  j["attempts"] = s.attempts;
  j["latency_seconds"] = s.latency_seconds;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : s.entries) j["entries"].push_back({{"rank", e.rank}, {"text", e.text}});
  j["raw_response"] = s.raw_response;
  return j;
}

inline RecommendationSet recommendation_set_from_json(const nlohmann::json& j) {
  RecommendationSet s;
  s.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  s.requested = j.at("requested").get<std::size_t>();
  s.shortfall = j.at("shortfall").get<std::size_t>();
  s.attempts = j.value("attempts", std::size_t{1});
  s.latency_seconds = j.at("latency_seconds").get<double>();
  for (const auto& e : j.at("entries")) {
    s.entries.push_back({e.at("rank").get<std::size_t>(), e.at("text").get<std::string>()});
  }
  s.raw_response = j.value("raw_response", std::string());
  return s;
}

inline nlohmann::json to_json(const UserRunRecord& r) {
  nlohmann::json j;
  j["user_id"] = r.user_id;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error_kind"] = r.error_kind;
    j["error_message"] = r.error_message;
  }
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : r.verdicts) {
    j["verdicts"].push_back(
        {{"product_id", v.product_id}, {"probability", v.probability}, {"is_sensitive", v.is_sensitive}});
  }
  j["allocation"] = {{"n_ns", r.allocation.n_ns}, {"n_s", r.allocation.n_s}};
  j["r_ns"] = r.r_ns ? to_json(*r.r_ns) : nlohmann::json(nullptr);
  j["r_s"] = r.r_s ? to_json(*r.r_s) : nlohmann::json(nullptr);
  j["final"] = nlohmann::json::array();
  for (const auto& e : r.final_entries) {
    j["final"].push_back({{"rank", e.rank},
                          {"text", e.text},
                          {"provenance", to_string(e.provenance)},
                          {"product_id", e.resolved.product_id},
                          {"main_category", e.resolved.main_category},
                          {"similarity", e.resolved.similarity}});
  }
  j["shortfall"] = r.shortfall;
  j["exposure"] = nlohmann::json::array();
  for (const auto& e : r.exposure) {
    nlohmann::json ej{{"product_id", e.product_id},
                      {"main_category", e.main_category},
                      {"flagged", e.flagged},
                      {"shared", e.shared}};
    ej["ground_truth_sensitive"] =
        e.ground_truth_sensitive ? nlohmann::json(*e.ground_truth_sensitive) : nlohmann::json(nullptr);
    ej["sensitivity_score"] =
        e.sensitivity_score ? nlohmann::json(*e.sensitivity_score) : nlohmann::json(nullptr);
    j["exposure"].push_back(std::move(ej));
  }
  j["target"] = {{"product_id", r.target.product_id},
                 {"main_category", r.target.main_category},
                 {"text", r.target.text}};
  j["timings"] = {{"t_obf", r.timings.t_obf},
                  {"t_rec", r.timings.t_rec},
                  {"t_deobf", r.timings.t_deobf},
                  {"t_total_extra", r.timings.t_total_extra},
                  {"wall", r.timings.wall}};
  return j;
}

inline UserRunRecord user_run_record_from_json(const nlohmann::json& j) {
  UserRunRecord r;
  try {
    r.user_id = j.at("user_id").get<std::string>();
    r.ok = j.at("ok").get<bool>();
    r.error_kind = j.value("error_kind", std::string());
    r.error_message = j.value("error_message", std::string());
    for (const auto& v : j.at("verdicts")) {
      r.verdicts.push_back({v.at("product_id").get<std::string>(), v.at("probability").get<double>(),
                            v.at("is_sensitive").get<bool>()});
    }
    r.allocation = {j.at("allocation").at("n_ns").get<std::size_t>(),
                    j.at("allocation").at("n_s").get<std::size_t>()};
    if (!j.at("r_ns").is_null()) r.r_ns = recommendation_set_from_json(j["r_ns"]);
    if (!j.at("r_s").is_null()) r.r_s = recommendation_set_from_json(j["r_s"]);
    for (const auto& e : j.at("final")) {
      r.final_entries.push_back(
          {e.at("rank").get<std::size_t>(), e.at("text").get<std::string>(),
           provenance_from_string(e.at("provenance").get<std::string>()),
           {e.at("product_id").get<std::string>(), e.at("main_category").get<std::string>(),
            e.at("similarity").get<double>()}});
    }
    r.shortfall = j.at("shortfall").get<std::size_t>();
    for (const auto& e : j.at("exposure")) {
      Exposure x;
      x.product_id = e.at("product_id").get<std::string>();
      x.main_category = e.at("main_category").get<std::string>();
      x.flagged = e.at("flagged").get<bool>();
      x.shared = e.at("shared").get<bool>();
      if (!e.at("ground_truth_sensitive").is_null()) {
        x.ground_truth_sensitive = e["ground_truth_sensitive"].get<bool>();
      }
      if (!e.at("sensitivity_score").is_null()) x.sensitivity_score = e["sensitivity_score"].get<double>();
      r.exposure.push_back(std::move(x));
    }
    const auto& t = j.at("target");
    r.target = {t.at("product_id").get<std::string>(), t.at("main_category").get<std::string>(),
                t.at("text").get<std::string>()};
    const auto& tm = j.at("timings");
    r.timings = {tm.at("t_obf").get<double>(), tm.at("t_rec").get<double>(),
                 tm.at("t_deobf").get<double>(), tm.at("t_total_extra").get<double>(),
                 tm.value("wall", 0.0)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("run record: ") + e.what());
  }
  return r;
}

inline nlohmann::json to_json(const AuditEntry& a) {
  return {{"user_id", a.user_id}, {"system", a.system}, {"user", a.user}, {"response", a.response}};
}

// Run directory layout:
//   manifest.json, records.jsonl, audit/server.jsonl, audit/local.jsonl
// The audit files hold raw prompts; they stay on the machine that ran the
// experiment and the manifest flags whether they contain sensitive items.
inline void write_run(const std::filesystem::path& dir, const RunResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "audit", ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + p.string());
    return out;
  };
  {
    auto out = open(dir / "manifest.json");
    out << result.manifest.dump(2) << '\n';
  }
  auto records = open(dir / "records.jsonl");
  auto server = open(dir / "audit" / "server.jsonl");
  auto local = open(dir / "audit" / "local.jsonl");
  for (const auto& r : result.records) {
    records << to_json(r).dump() << '\n';
    if (r.server_audit) server << to_json(*r.server_audit).dump() << '\n';
    if (r.local_audit) local << to_json(*r.local_audit).dump() << '\n';
  }
  if (!records || !server || !local) throw Error(ErrorKind::kIo, "write failed in " + dir.string());
}

struct LoadedRun {
  nlohmann::json manifest;
  std::vector<UserRunRecord> records;
};

inline LoadedRun read_run(const std::filesystem::path& dir) {
  LoadedRun run;
  std::ifstream m(dir / "manifest.json", std::ios::binary);
  if (!m) throw Error(ErrorKind::kIo, "cannot open " + (dir / "manifest.json").string());
  run.manifest = nlohmann::json::parse(m, nullptr, false);
  if (run.manifest.is_discarded() || run.manifest.value("format", "") != "privrec-run") {
    throw Error(ErrorKind::kFormat, dir.string() + " is not a run directory");
  }
  std::ifstream in(dir / "records.jsonl", std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + (dir / "records.jsonl").string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::kFormat, "malformed record line");
    run.records.push_back(user_run_record_from_json(j));
  }
  return run;
}

}  // namespace privrec::pipeline
