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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "privrec/error.hpp"
#include "privrec/evaluation/metrics.hpp"
#include "privrec/hash.hpp"
#include "privrec/pipeline/config.hpp"
#include "privrec/pipeline/runner.hpp"
#include "privrec/retrieval/embedding.hpp"

namespace privrec::evaluation {

struct RunMetrics {
  std::string run_id;
  pipeline::Scheme scheme = pipeline::Scheme::kBaseline;
  std::string manifest_hash;
  std::size_t users = 0;
  std::size_t evaluated_users = 0;  // successful records
  std::size_t failed_users = 0;

  double hr10_exact = 0.0;
  double hr10_category = 0.0;
  SemanticResult hr10_semantic;

  // Distances to the baseline run. "pooled" compares the distributions of all
  // recommendations; "user_avg" averages per-user distances over users
  // evaluated in both runs.
  double l1 = 0.0;
  double l2 = 0.0;
  std::optional<double> l1_user_avg;
  std::optional<double> l2_user_avg;
  std::optional<PerGroupDistances> per_group;
  std::string per_group_note;

  std::optional<Leakage> leakage;

  std::size_t shortfall = 0;
  std::size_t duplicates = 0;
  std::optional<ScoreStats> scores;
  std::optional<double> missed_item_mean;  // mean score of sensitive items that leaked
};

struct RecoveryRow {
  pipeline::Scheme with_deobf;
  std::optional<double> l2_pct;
  std::optional<double> l1_pct;
};

struct Report {
  std::string baseline_run_id;
  std::vector<std::string> category_universe;
  std::vector<std::string> sensitive_categories;
  std::vector<RunMetrics> runs;  // canonical scheme order, baseline first
  std::vector<RecoveryRow> recovery;
};

namespace detail {

inline std::vector<UserOutcome> outcomes(const std::vector<pipeline::UserRunRecord>& records) {
  std::vector<UserOutcome> out;
  for (const auto& r : records) {
    if (!r.ok) continue;
    UserOutcome u{r.target.product_id, r.target.main_category, {}, {}};
    for (const auto& e : r.final_entries) {
      u.rec_ids.push_back(e.resolved.product_id);
      u.rec_categories.push_back(e.resolved.main_category);
    }
    out.push_back(std::move(u));
  }
  return out;
}

inline std::vector<std::string> pooled_categories(const std::vector<pipeline::UserRunRecord>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) {
    if (!r.ok) continue;
    for (const auto& e : r.final_entries) out.push_back(e.resolved.main_category);
  }
  return out;
}

inline std::map<std::string, std::vector<std::string>> per_user_categories(
    const std::vector<pipeline::UserRunRecord>& rs) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& r : rs) {
    if (!r.ok || r.final_entries.empty()) continue;
    auto& v = out[r.user_id];
    for (const auto& e : r.final_entries) v.push_back(e.resolved.main_category);
  }
  return out;
}

inline SemanticResult semantic(const std::vector<pipeline::UserRunRecord>& records,
                               const retrieval::EmbeddingProvider& provider) {
  std::vector<SemanticInput> inputs;
  for (const auto& r : records) {
    if (!r.ok) continue;
    std::vector<std::string> texts{r.target.text};
    const std::size_t k = std::min(kHitRateK, r.final_entries.size());
    for (std::size_t i = 0; i < k; ++i) texts.push_back(r.final_entries[i].text);
    auto embedded = provider.embed(texts);
    SemanticInput in;
    in.target = std::move(embedded.front());
    in.recs.assign(std::make_move_iterator(embedded.begin() + 1),
                   std::make_move_iterator(embedded.end()));
    inputs.push_back(std::move(in));
  }
  return hr10_semantic(inputs);
}

}  // namespace detail

inline RunMetrics evaluate_run(const pipeline::LoadedRun& run, const pipeline::LoadedRun& baseline,
                               const retrieval::EmbeddingProvider& provider) {
  RunMetrics m;
  m.run_id = run.manifest.at("run_id").get<std::string>();
  m.scheme = pipeline::scheme_from_string(run.manifest.at("scheme").get<std::string>());
  m.manifest_hash = sha256_hex(run.manifest.dump());
  const auto universe = run.manifest.at("category_universe").get<std::vector<std::string>>();
  if (universe != baseline.manifest.at("category_universe").get<std::vector<std::string>>()) {
    throw Error(ErrorKind::kShape, "run " + m.run_id + " uses a different category universe");
  }
  const auto sensitive_categories =
      baseline.manifest.at("sensitive_categories").get<std::vector<std::string>>();

  m.users = run.records.size();
  const auto users = detail::outcomes(run.records);
  m.evaluated_users = users.size();
  m.failed_users = m.users - m.evaluated_users;
  m.hr10_exact = hr10_exact(users);
  m.hr10_category = hr10_category(users);
  m.hr10_semantic = detail::semantic(run.records, provider);

  const auto base_d = distribution(detail::pooled_categories(baseline.records), universe);
  const auto sys_d = distribution(detail::pooled_categories(run.records), universe);
  m.l1 = l1_distance(base_d, sys_d);
  m.l2 = l2_distance(base_d, sys_d);
  try {
    m.per_group = per_group_distances(base_d, sys_d, sensitive_categories);
  } catch (const Error& e) {
    m.per_group_note = e.what();
  }

  const auto base_users = detail::per_user_categories(baseline.records);
  const auto sys_users = detail::per_user_categories(run.records);
  double s1 = 0.0, s2 = 0.0;
  std::size_t paired = 0;
  for (const auto& [user, cats] : sys_users) {
    const auto it = base_users.find(user);
    if (it == base_users.end()) continue;
    const auto a = distribution(it->second, universe);
    const auto b = distribution(cats, universe);
    s1 += l1_distance(a, b);
    s2 += l2_distance(a, b);
    ++paired;
  }
  if (paired > 0) {
    m.l1_user_avg = s1 / static_cast<double>(paired);
    m.l2_user_avg = s2 / static_cast<double>(paired);
  }

  // Leakage pools every ground-truth-sensitive history item over all users,
  // failed ones included: a failed user's payload may still have been sent.
  std::vector<bool> shared;
  std::vector<double> scores;
  bool all_scored = true;
  std::vector<double> every_score;
  std::vector<double> missed;
  for (const auto& r : run.records) {
    m.shortfall += r.ok ? r.shortfall : 0;
    if (r.ok) {
      std::vector<std::string> ids;
      for (const auto& e : r.final_entries) ids.push_back(e.resolved.product_id);
      m.duplicates += duplicate_count(ids);
    }
    for (const auto& e : r.exposure) {
      if (e.sensitivity_score) every_score.push_back(*e.sensitivity_score);
      if (!e.ground_truth_sensitive.value_or(false)) continue;
      shared.push_back(e.shared);
      if (e.sensitivity_score) {
        scores.push_back(*e.sensitivity_score);
        if (e.shared) missed.push_back(*e.sensitivity_score);
      } else {
        all_scored = false;
      }
    }
  }
  if (!shared.empty()) {
    m.leakage = privacy_leakage(shared, all_scored ? std::optional(scores) : std::nullopt);
  }
  m.scores = score_stats(every_score);
  if (const auto s = score_stats(missed)) m.missed_item_mean = s->mean;
  return m;
}

// Evaluates every run against the one whose run_id is `baseline_run_id`.
inline Report build_report(const std::vector<pipeline::LoadedRun>& runs,
                           const std::string& baseline_run_id,
                           const retrieval::EmbeddingProvider& provider) {
  if (runs.empty()) throw Error(ErrorKind::kConfig, "report needs at least one run");
  const pipeline::LoadedRun* baseline = nullptr;
  for (const auto& r : runs) {
    if (r.manifest.value("run_id", "") == baseline_run_id) baseline = &r;
  }
  if (baseline == nullptr) {
    throw Error(ErrorKind::kConfig, "baseline run '" + baseline_run_id + "' not among the runs");
  }
  Report report;
  report.baseline_run_id = baseline_run_id;
  report.category_universe = baseline->manifest.at("category_universe").get<std::vector<std::string>>();
  report.sensitive_categories =
      baseline->manifest.at("sensitive_categories").get<std::vector<std::string>>();
  for (const auto& r : runs) report.runs.push_back(evaluate_run(r, *baseline, provider));
  std::stable_sort(report.runs.begin(), report.runs.end(), [&](const auto& a, const auto& b) {
    const bool ab = a.run_id == baseline_run_id, bb = b.run_id == baseline_run_id;
    if (ab != bb) return ab;
    if (a.scheme != b.scheme) return pipeline::scheme_rank(a.scheme) < pipeline::scheme_rank(b.scheme);
    return a.run_id < b.run_id;
  });

  auto find = [&](pipeline::Scheme s) -> const RunMetrics* {
    for (const auto& m : report.runs) {
      if (m.scheme == s) return &m;
    }
    return nullptr;
  };
  const std::pair<pipeline::Scheme, pipeline::Scheme> pairs[] = {
      {pipeline::Scheme::kCatObfOnly, pipeline::Scheme::kCatObfDeobf},
      {pipeline::Scheme::kBertObfOnly, pipeline::Scheme::kBertObfDeobf}};
  for (const auto& [only, deobf] : pairs) {
    const auto* a = find(only);
    const auto* b = find(deobf);
    if (a == nullptr || b == nullptr) continue;
    RecoveryRow row{deobf, std::nullopt, std::nullopt};
    if (a->l2 > 0.0) row.l2_pct = recovery(a->l2, b->l2);
    if (a->l1 > 0.0) row.l1_pct = recovery(a->l1, b->l1);
    report.recovery.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Emission

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string percent4(double fraction) { return fixed4(100.0 * fraction) + "%"; }

namespace detail {

inline nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::string cell(const std::optional<double>& v) { return v ? fixed4(*v) : "n/a"; }

inline std::string pct_cell(const std::optional<double>& v) { return v ? percent4(*v) : "n/a"; }

inline std::string render_table(const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) out << "  ";
      if (c == 0) {
        out << r[c] << std::string(width[c] - r[c].size(), ' ');
      } else {
        out << std::string(width[c] - r[c].size(), ' ') << r[c];
      }
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

}  // namespace detail

inline nlohmann::json to_json(const RunMetrics& m) {
  nlohmann::json j;
  j["run_id"] = m.run_id;
  j["scheme"] = pipeline::to_string(m.scheme);
  j["display_name"] = pipeline::display_name(m.scheme);
  j["manifest_sha256"] = m.manifest_hash;
  j["users"] = m.users;
  j["evaluated_users"] = m.evaluated_users;
  j["failed_users"] = m.failed_users;
  j["hr10_exact"] = m.hr10_exact;
  j["hr10_category"] = m.hr10_category;
  j["hr10_semantic"] = m.hr10_semantic.value;
  j["hr10_semantic_excluded"] = m.hr10_semantic.excluded;
  j["l1_pooled"] = m.l1;
  j["l2_pooled"] = m.l2;
  j["l1_user_avg"] = detail::opt(m.l1_user_avg);
  j["l2_user_avg"] = detail::opt(m.l2_user_avg);
  if (m.per_group) {
    j["per_group"] = {
        {"sensitive", {{"avg_l1", m.per_group->sensitive.avg_l1},
                       {"avg_l2", m.per_group->sensitive.avg_l2},
                       {"categories", m.per_group->sensitive.categories}}},
        {"nonsensitive", {{"avg_l1", m.per_group->nonsensitive.avg_l1},
                          {"avg_l2", m.per_group->nonsensitive.avg_l2},
                          {"categories", m.per_group->nonsensitive.categories}}}};
  } else {
    j["per_group"] = nullptr;
    j["per_group_note"] = m.per_group_note;
  }
  if (m.leakage) {
    j["pl_b"] = m.leakage->pl_b;
    j["pl_s"] = detail::opt(m.leakage->pl_s);
    j["sensitive_history_items"] = m.leakage->sensitive_items;
  } else {
    j["pl_b"] = nullptr;
    j["pl_s"] = nullptr;
    j["sensitive_history_items"] = 0;
  }
  j["shortfall"] = m.shortfall;
  j["duplicate_recommendations"] = m.duplicates;
  if (m.scores) {
    j["sensitivity_scores"] = {
        {"count", m.scores->count}, {"mean", m.scores->mean}, {"std", m.scores->stddev}};
  } else {
    j["sensitivity_scores"] = nullptr;
  }
  j["missed_sensitive_score_mean"] = detail::opt(m.missed_item_mean);
  return j;
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json j;
  j["format"] = "privrec-report";
  j["version"] = 1;
  j["baseline_run_id"] = r.baseline_run_id;
  j["category_universe"] = r.category_universe;
  j["sensitive_categories"] = r.sensitive_categories;
  j["distance_headline"] = "pooled";
  j["runs"] = nlohmann::json::array();
  for (const auto& m : r.runs) j["runs"].push_back(to_json(m));
  j["recovery"] = nlohmann::json::array();
  for (const auto& row : r.recovery) {
    j["recovery"].push_back({{"scheme", pipeline::to_string(row.with_deobf)},
                             {"l2_pct", detail::opt(row.l2_pct)},
                             {"l1_pct", detail::opt(row.l1_pct)}});
  }
  return j;
}

inline std::string render_text(const Report& r) {
  std::ostringstream out;
  out << "Baseline run: " << r.baseline_run_id << "\n\n";

  std::vector<std::vector<std::string>> main_rows, group_rows, extra_rows;
  for (const auto& m : r.runs) {
    const std::string name(pipeline::display_name(m.scheme));
    main_rows.push_back({name, fixed4(m.hr10_category), fixed4(m.hr10_semantic.value), fixed4(m.l2),
                         fixed4(m.l1),
                         m.leakage ? percent4(m.leakage->pl_b) : "n/a",
                         m.leakage ? detail::pct_cell(m.leakage->pl_s) : "n/a"});
    if (m.per_group) {
      group_rows.push_back({name, fixed4(m.per_group->nonsensitive.avg_l2),
                            fixed4(m.per_group->nonsensitive.avg_l1),
                            fixed4(m.per_group->sensitive.avg_l2),
                            fixed4(m.per_group->sensitive.avg_l1)});
    } else {
      group_rows.push_back({name, "n/a", "n/a", "n/a", "n/a"});
    }
    extra_rows.push_back({name, m.run_id, fixed4(m.hr10_exact), detail::cell(m.l2_user_avg),
                          detail::cell(m.l1_user_avg), std::to_string(m.evaluated_users),
                          std::to_string(m.failed_users), std::to_string(m.shortfall),
                          std::to_string(m.duplicates)});
  }
  out << "Utility and privacy\n"
      << detail::render_table({"Scheme", "Categorical HR@10", "Semantic HR@10", "L2 Distance",
                               "L1 Distance", "PL_b (%)", "PL_s (%)"},
                              main_rows)
      << '\n';
  out << "Per-group distances\n"
      << detail::render_table({"Scheme", "Nonsensitive Avg L2", "Nonsensitive Avg L1",
                               "Sensitive Avg L2", "Sensitive Avg L1"},
                              group_rows)
      << '\n';
  if (!r.recovery.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : r.recovery) {
      rows.push_back({std::string(pipeline::display_name(row.with_deobf)),
                      row.l2_pct ? fixed4(*row.l2_pct) + "%" : "n/a",
                      row.l1_pct ? fixed4(*row.l1_pct) + "%" : "n/a"});
    }
    out << "Recovery\n" << detail::render_table({"Scheme", "L2", "L1"}, rows) << '\n';
  }
  out << "Additional statistics (distances to baseline: pooled above, per-user average here)\n"
      << detail::render_table({"Scheme", "Run", "Exact HR@10", "User-avg L2", "User-avg L1", "Users",
                               "Failed", "Shortfall", "Duplicates"},
                              extra_rows);
  bool any_scores = false;
  for (const auto& m : r.runs) any_scores = any_scores || m.scores.has_value();
  if (any_scores) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : r.runs) {
      rows.push_back({std::string(pipeline::display_name(m.scheme)),
                      m.scores ? fixed4(m.scores->mean) : "n/a",
                      m.scores ? fixed4(m.scores->stddev) : "n/a", detail::cell(m.missed_item_mean)});
    }
    out << "\nSensitivity scores of history items\n"
        << detail::render_table({"Scheme", "Mean", "Std", "Leaked-sensitive mean"}, rows);
  }
  return out.str();
}

// Timing summary per run, kept apart from the report so that the report
// itself is reproducible byte for byte.
inline nlohmann::json timing_summary(const std::vector<pipeline::LoadedRun>& runs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& run : runs) {
    double obf = 0, rec = 0, deobf = 0, extra = 0, wall = 0;
    std::size_t n = 0;
    for (const auto& r : run.records) {
      if (!r.ok) continue;
      obf += r.timings.t_obf;
      rec += r.timings.t_rec;
      deobf += r.timings.t_deobf;
      extra += r.timings.t_total_extra;
      wall += r.timings.wall;
      ++n;
    }
    const double d = n > 0 ? static_cast<double>(n) : 1.0;
    j.push_back({{"run_id", run.manifest.value("run_id", "")},
                 {"users", n},
                 {"mean_t_obf", obf / d},
                 {"mean_t_rec", rec / d},
                 {"mean_t_deobf", deobf / d},
                 {"mean_t_total_extra", extra / d},
                 {"mean_wall", wall / d}});
  }
  return j;
}

inline void write_report(const std::filesystem::path& dir, const Report& report,
                         const nlohmann::json& timings) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string());
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + p.string());
    out << text;
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + p.string());
  };
  write(dir / "report.json", to_json(report).dump(2) + "\n");
  write(dir / "report.txt", render_text(report));
  write(dir / "timings.json", timings.dump(2) + "\n");
}

}  // namespace privrec::evaluation
