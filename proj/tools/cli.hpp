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

// Command-line front end: ingest, train-classifier, classify, build-index,
// run, report, selfcheck.

#pragma once

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "privrec/catalog.hpp"
#include "privrec/error.hpp"
#include "privrec/evaluation/metrics.hpp"
#include "privrec/evaluation/report.hpp"
#include "privrec/pipeline/allocation.hpp"
#include "privrec/pipeline/config.hpp"
#include "privrec/pipeline/runner.hpp"
#include "privrec/retrieval/embedding.hpp"
#include "privrec/retrieval/vector_index.hpp"
#include "privrec/sensitivity/classifier.hpp"
#include "privrec/sensitivity/scorer.hpp"
#include "privrec/testing/oracles.hpp"

namespace privrec::cli {

namespace fs = std::filesystem;

inline constexpr const char* kConfigKeys = R"(Run config keys (JSON object):
  scheme            baseline | only_local | cat_obf_only | cat_obf_deobf |
                    bert_obf_only | bert_obf_deobf                (required)
  run_id            label used in reports                 (default: scheme)
  n_total           recommendations per user                    (default 10)
  seed              seed for the processing order                (default 0)
  parallelism       worker threads                               (default 1)
  query             optional user query prepended to recommender prompts
  reprompt_retries  extra calls on a short or unparseable list   (default 0)
  failure_cap       tolerated fraction of failed users        (default 0.05)
  scorer            {kind: categorical | trained | remote, threshold,
                     sensitive_categories, model_path, endpoint, timeout_seconds}
  server_backend,   {kind: remote_api | local_endpoint | mock_retrieval |
  local_backend      mock_scripted, base_url, model, auth_token_env,
                     timeout_seconds, temperature, same_category, response,
                     delay_seconds, fail_on_substring}
  embedding         {kind: deterministic_hash | remote_endpoint, dimension,
                     endpoint, timeout_seconds}
API tokens are read from the environment variable named by auth_token_env
(default PRIVREC_API_KEY) and are never written anywhere.

Exit codes: 0 ok, 1 failure, 2 usage, 3 config, 4 backend, 5 io, 6 data.)";

struct Globals {
  std::string config;
  std::optional<uint64_t> seed;
  std::string log_level = "info";
};

inline std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = spdlog::stderr_logger_mt("privrec");
    l->set_pattern("[%l] %v");
    return l;
  }();
  return log;
}

inline void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + path.parent_path().string());
}

inline void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return in;
}

inline nlohmann::json metrics_json(const sensitivity::ClassifierMetrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
          {"f1", m.f1}, {"loss", m.loss}};
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
  std::string metadata, interactions, labels, scores, out;
  std::size_t min_items = 30;
  std::size_t window = 20;
  std::optional<std::size_t> limit;
};

inline int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  IngestOptions options;
  options.max_records = a.limit;
  auto ingested = ingest_metadata_file(a.metadata, options);
  CatalogArchive archive;
  archive.catalog = std::move(ingested.catalog);
  if (archive.catalog.empty()) throw Error(ErrorKind::kEmptyCatalog, "no products ingested");
  std::size_t unresolved_labels = 0, unresolved_scores = 0;
  if (!a.labels.empty()) {
    auto in = open_input(a.labels);
    unresolved_labels = apply_labels(archive.catalog, in);
  }
  if (!a.scores.empty()) {
    auto in = open_input(a.scores);
    unresolved_scores = apply_scores(archive.catalog, in);
  }
  auto in = open_input(a.interactions);
  auto interactions = read_interactions(in);
  auto built = build_histories(group_interactions(std::move(interactions.interactions)),
                               archive.catalog, {a.min_items, a.window});
  archive.histories = std::move(built.histories);
  archive.stats = {{"products", archive.catalog.size()},
                   {"skipped_malformed_metadata", ingested.skipped_malformed},
                   {"duplicate_products", ingested.duplicates},
                   {"skipped_malformed_interactions", interactions.skipped_malformed},
                   {"dropped_unresolvable_interactions", built.dropped_unresolvable},
                   {"excluded_users", built.excluded_users},
                   {"users", archive.histories.size()},
                   {"unresolved_labels", unresolved_labels},
                   {"unresolved_scores", unresolved_scores},
                   {"min_items", a.min_items},
                   {"window", a.window}};
  if (ingested.skipped_malformed > 0) {
    logger()->warn("skipped {} malformed metadata records", ingested.skipped_malformed);
  }
  if (archive.histories.empty()) logger()->warn("no user has {} resolvable interactions", a.min_items);
  ensure_parent(a.out);
  write_archive(a.out, archive);
  out << "ingested " << archive.catalog.size() << " products, " << archive.histories.size()
      << " users -> " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train-classifier

struct TrainArgs {
  std::string catalog, labels, out, metrics_out;
  double gamma = 2.0;
  double threshold = sensitivity::kRecallPriorityThreshold;
  sensitivity::TrainingHyperparameters hyper;
};

inline int cmd_train(const TrainArgs& a, const Globals& g, std::ostream& out) {
  auto archive = read_archive(a.catalog);
  if (!a.labels.empty()) {
    auto in = open_input(a.labels);
    apply_labels(archive.catalog, in);
  }
  std::vector<sensitivity::LabeledText> labeled;
  for (const auto& p : archive.catalog.products()) {
    if (p.ground_truth_sensitive) labeled.push_back({canonical_text(p), *p.ground_truth_sensitive});
  }
  if (labeled.empty()) throw Error(ErrorKind::kDegenerateClass, "no labeled products in the catalog");
  sensitivity::TrainerOptions options;
  options.gamma = a.gamma;
  options.threshold = a.threshold;
  options.hyper = a.hyper;
  if (g.seed) options.hyper.seed = *g.seed;
  logger()->info("training on {} labeled products", labeled.size());
  const auto result = sensitivity::train_classifier(labeled, options);
  ensure_parent(a.out);
  sensitivity::save_classifier(result.classifier, fs::path(a.out));

  nlohmann::json m;
  m["labeled"] = labeled.size();
  m["split"] = {{"train", result.split.train.size()},
                {"validation", result.split.validation.size()},
                {"test", result.split.test.size()}};
  m["hyperparameters"] = {{"learning_rate", options.hyper.learning_rate},
                          {"weight_decay", options.hyper.weight_decay},
                          {"batch_size", options.hyper.batch_size},
                          {"epochs", options.hyper.epochs},
                          {"seed", options.hyper.seed},
                          {"gamma", options.gamma},
                          {"threshold", options.threshold}};
  m["class_weights"] = {{"nonsensitive", result.class_weights.nonsensitive},
                        {"sensitive", result.class_weights.sensitive}};
  m["best_epoch"] = result.classifier.metadata().best_epoch;
  m["validation"] = metrics_json(result.validation);
  m["test"] = metrics_json(result.test);
  m["epochs"] = nlohmann::json::array();
  for (const auto& e : result.epochs) {
    m["epochs"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss},
                           {"validation", metrics_json(e.validation)}});
  }
  const fs::path metrics_path = a.metrics_out.empty() ? fs::path(a.out + ".metrics.json")
                                                      : fs::path(a.metrics_out);
  write_text(metrics_path, m.dump(2) + "\n");
  out << "model -> " << a.out << " (best epoch " << result.classifier.metadata().best_epoch
      << ", validation F1 " << evaluation::fixed4(result.validation.f1) << ", test F1 "
      << evaluation::fixed4(result.test.f1) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
  std::string model, catalog, out;
  std::optional<double> threshold;
};

inline int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
  const auto classifier = sensitivity::load_classifier(fs::path(a.model));
  const double threshold = a.threshold.value_or(classifier.threshold());
  const auto archive = read_archive(a.catalog);
  std::string lines;
  std::vector<sensitivity::LabeledText> labeled;
  std::size_t flagged = 0;
  for (const auto& p : archive.catalog.products()) {
    const auto text = canonical_text(p);
    const double prob = classifier.probability(text.text);
    const auto v = sensitivity::make_verdict(p.id, prob, threshold);
    flagged += v.is_sensitive ? 1 : 0;
    lines += nlohmann::json{{"product_id", p.id}, {"probability", prob},
                            {"sensitive", v.is_sensitive}}.dump() + "\n";
    if (p.ground_truth_sensitive) labeled.push_back({text, *p.ground_truth_sensitive});
  }
  write_text(a.out, lines);
  out << "classified " << archive.catalog.size() << " products, " << flagged
      << " flagged sensitive at threshold " << threshold << " -> " << a.out << "\n";
  if (!labeled.empty()) {
    const auto m = sensitivity::evaluate_classifier(classifier, labeled, threshold);
    out << "against catalog labels: precision " << evaluation::fixed4(m.precision) << ", recall "
        << evaluation::fixed4(m.recall) << ", F1 " << evaluation::fixed4(m.f1) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// build-index

struct IndexArgs {
  std::string catalog, out, embedding_endpoint;
  std::size_t dimension = retrieval::kReferenceDimension;
};

inline int cmd_build_index(const IndexArgs& a, std::ostream& out) {
  const auto archive = read_archive(a.catalog);
  retrieval::ProviderConfig pc;
  pc.dimension = a.dimension;
  if (!a.embedding_endpoint.empty()) {
    pc.kind = retrieval::ProviderKind::kRemoteEndpoint;
    pc.endpoint = a.embedding_endpoint;
  }
  const auto provider = retrieval::make_provider(pc);
  const auto index = retrieval::build_index(archive.catalog, *provider);
  ensure_parent(a.out);
  retrieval::save_index(index, a.out);
  out << "indexed " << index.size() << " products (dimension " << index.dimension() << ") -> "
      << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string catalog, index, out, scorer_model;
  std::optional<std::size_t> parallelism;
};

inline int cmd_run(const RunArgs& a, const Globals& g, std::ostream& out) {
  if (g.config.empty()) throw Error(ErrorKind::kConfig, "run needs --config");
  auto cfg = pipeline::load_experiment_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (a.parallelism) cfg.parallelism = *a.parallelism;
  if (!a.scorer_model.empty()) {
    if (cfg.scorer && cfg.scorer->kind == sensitivity::ScorerKind::kTrained) {
      cfg.scorer->model_path = a.scorer_model;
    } else {
      logger()->debug("--scorer-model ignored: {} has no trained scorer", cfg.run_id);
    }
  }
  cfg.validate();

  auto archive = read_archive(a.catalog);
  auto catalog = std::make_shared<const Catalog>(std::move(archive.catalog));
  auto index = std::make_shared<const retrieval::VectorIndex>(retrieval::load_index(a.index));
  retrieval::ProviderConfig pc;
  pc.dimension = index->dimension();
  if (cfg.embedding) pc = *cfg.embedding;
  if (pc.dimension != index->dimension()) {
    throw Error(ErrorKind::kConfig, "embedding dimension " + std::to_string(pc.dimension) +
                                        " does not match the index (" +
                                        std::to_string(index->dimension()) + ")");
  }
  cfg.embedding = pc;
  std::shared_ptr<const retrieval::EmbeddingProvider> provider = retrieval::make_provider(pc);
  if (archive.histories.empty()) throw Error(ErrorKind::kConfig, "catalog archive has no histories");

  const auto resources = pipeline::make_resources(cfg, catalog, index, provider);
  logger()->info("run {}: scheme {}, {} users, parallelism {}", cfg.run_id,
                 pipeline::to_string(cfg.scheme), archive.histories.size(), cfg.parallelism);
  const auto result = pipeline::run_experiment(cfg, resources, archive.histories, cfg.parallelism);
  pipeline::write_run(a.out, result);
  if (result.manifest.value("contains_sensitive_payloads", false)) {
    logger()->warn("{} holds sensitive prompts in its audit logs; keep it local", a.out);
  }
  out << "run " << cfg.run_id << ": " << result.records.size() - result.failed << "/"
      << result.records.size() << " users ok -> " << a.out << "\n";
  if (result.cap_exceeded) {
    logger()->error("{} of {} users failed (cap {}), mostly '{}'", result.failed,
                    result.records.size(), cfg.failure_cap, result.dominant_error);
    const bool backend = result.dominant_error == "transport" ||
                         result.dominant_error == "protocol" || result.dominant_error == "empty";
    return backend ? kExitBackend : kExitFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::vector<std::string> runs;
  std::string baseline = "baseline";
  std::string out;
};

inline int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::vector<pipeline::LoadedRun> runs;
  for (const auto& dir : a.runs) runs.push_back(pipeline::read_run(dir));
  const pipeline::LoadedRun* baseline = nullptr;
  for (const auto& r : runs) {
    if (r.manifest.value("run_id", "") == a.baseline) baseline = &r;
  }
  if (baseline == nullptr) throw Error(ErrorKind::kConfig, "baseline run '" + a.baseline + "' not found");
  const auto provider =
      retrieval::make_provider(retrieval::provider_config_from_json(baseline->manifest.at("embedding")));
  const auto report = evaluation::build_report(runs, a.baseline, *provider);
  evaluation::write_report(a.out, report, evaluation::timing_summary(runs));
  out << evaluation::render_text(report);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// selfcheck

inline int cmd_selfcheck(std::size_t instances, const Globals& g, std::ostream& out) {
  bool ok = true;
  const auto suites = testing::run_metric_oracle_suites(g.seed.value_or(20240601), instances);
  for (const auto& s : suites) {
    ok = ok && s.passed();
    out << (s.passed() ? "[PASS] " : "[FAIL] ") << s.name << ": " << s.instances
        << " instances, max |diff| " << s.max_abs_diff << "\n";
  }
  auto check = [&](const std::string& name, double got, double want, double tol) {
    const bool pass = std::abs(got - want) <= tol;
    ok = ok && pass;
    out << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << evaluation::fixed4(got) << "\n";
  };
  check("recovery L2 (0.4860, 0.2847)", evaluation::recovery(0.4860, 0.2847), 41.42, 0.11);
  check("recovery L1 (0.8462, 0.4773)", evaluation::recovery(0.8462, 0.4773), 43.59, 0.02);
  check("timing_extra (0.1808, 2.7428, 6.3816)", pipeline::timing_extra(0.1808, 2.7428, 6.3816),
        3.8196, 1e-12);
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

inline int main(int argc, char** argv, std::ostream& out = std::cout) {
  CLI::App app{"privrec: privacy-preserving recommendation pipeline and evaluation harness"};
  app.footer(kConfigKeys);
  app.set_version_flag("--version", "privrec 0.1.0");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run config file (JSON)");
  app.add_option("--seed", g.seed, "Seed for every stochastic component");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Build a catalog archive from metadata and interactions");
  c_ingest->add_option("--metadata", ingest.metadata, "Product metadata (JSONL)")->required();
  c_ingest->add_option("--interactions", ingest.interactions, "User interactions (JSONL)")->required();
  c_ingest->add_option("--labels", ingest.labels, "Sensitivity labels (JSONL)");
  c_ingest->add_option("--scores", ingest.scores, "Sensitivity scores (JSONL)");
  c_ingest->add_option("--min-items", ingest.min_items, "Minimum interactions per user")
      ->capture_default_str();
  c_ingest->add_option("--window", ingest.window, "History length")->capture_default_str();
  c_ingest->add_option("--limit", ingest.limit, "Read at most this many metadata records");
  c_ingest->add_option("--out", ingest.out, "Catalog archive to write")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train-classifier", "Train the sensitivity classifier");
  c_train->add_option("--catalog", train.catalog, "Catalog archive with labels")->required();
  c_train->add_option("--labels", train.labels, "Extra labels (JSONL) applied on top");
  c_train->add_option("--gamma", train.gamma, "Focal loss focusing parameter")->capture_default_str();
  c_train->add_option("--threshold", train.threshold, "Decision threshold")->capture_default_str();
  c_train->add_option("--lr", train.hyper.learning_rate, "Learning rate")->capture_default_str();
  c_train->add_option("--epochs", train.hyper.epochs, "Epochs")->capture_default_str();
  c_train->add_option("--batch-size", train.hyper.batch_size, "Batch size")->capture_default_str();
  c_train->add_option("--weight-decay", train.hyper.weight_decay, "Weight decay")->capture_default_str();
  c_train->add_option("--out", train.out, "Model file to write")->required();
  c_train->add_option("--metrics", train.metrics_out, "Metrics file (default <out>.metrics.json)");

  ClassifyArgs classify;
  auto* c_classify = app.add_subcommand("classify", "Score every catalog product with a trained model");
  c_classify->add_option("--model", classify.model, "Model file")->required();
  c_classify->add_option("--catalog", classify.catalog, "Catalog archive")->required();
  c_classify->add_option("--threshold", classify.threshold, "Override the model threshold");
  c_classify->add_option("--out", classify.out, "Verdicts to write (JSONL)")->required();

  IndexArgs index;
  auto* c_index = app.add_subcommand("build-index", "Embed the catalog into a vector index");
  c_index->add_option("--catalog", index.catalog, "Catalog archive")->required();
  c_index->add_option("--dimension", index.dimension, "Embedding dimension")->capture_default_str();
  c_index->add_option("--embedding-endpoint", index.embedding_endpoint,
                      "Remote /embed service (default: deterministic hash)");
  c_index->add_option("--out", index.out, "Index file to write")->required();

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run one scheme over every user");
  c_run->add_option("--catalog", run.catalog, "Catalog archive")->required();
  c_run->add_option("--index", run.index, "Vector index")->required();
  c_run->add_option("--out", run.out, "Run directory to write")->required();
  c_run->add_option("--parallelism", run.parallelism, "Worker threads (overrides config)");
  c_run->add_option("--scorer-model", run.scorer_model, "Model file for a trained scorer");

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Compare runs against a baseline run");
  c_report->add_option("--runs", report.runs, "Run directories")->required();
  c_report->add_option("--baseline", report.baseline, "run_id of the baseline")->capture_default_str();
  c_report->add_option("--out", report.out, "Report directory")->required();

  std::size_t instances = 500;
  auto* c_self = app.add_subcommand("selfcheck", "Check metrics against independent oracles");
  c_self->add_option("--instances", instances, "Random instances per suite")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  logger()->set_level(spdlog::level::from_str(g.log_level));
  try {
    if (*c_ingest) return cmd_ingest(ingest, out);
    if (*c_train) return cmd_train(train, g, out);
    if (*c_classify) return cmd_classify(classify, out);
    if (*c_index) return cmd_build_index(index, out);
    if (*c_run) return cmd_run(run, g, out);
    if (*c_report) return cmd_report(report, out);
    if (*c_self) return cmd_selfcheck(instances, g, out);
  } catch (const Error& e) {
    logger()->error("{}: {}", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    logger()->error("format: {}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace privrec::cli
