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

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "privrec/error.hpp"
#include "privrec/retrieval/embedding.hpp"

namespace privrec::evaluation {

// Top-k cutoff for the hit-rate metrics.
inline constexpr std::size_t kHitRateK = 10;

// What a metric needs to know about one user's recommendations.
struct UserOutcome {
  std::string target_id;
  std::string target_category;
  std::vector<std::string> rec_ids;         // resolved, rank order
  std::vector<std::string> rec_categories;  // aligned with rec_ids
};

inline double hr10_exact(std::span<const UserOutcome> users) {
  if (users.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& u : users) {
    const std::size_t k = std::min(kHitRateK, u.rec_ids.size());
    for (std::size_t i = 0; i < k; ++i) {
      if (u.rec_ids[i] == u.target_id) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(users.size());
}

inline double hr10_category(std::span<const UserOutcome> users) {
  if (users.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& u : users) {
    const std::size_t k = std::min(kHitRateK, u.rec_categories.size());
    for (std::size_t i = 0; i < k; ++i) {
      if (u.rec_categories[i] == u.target_category) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(users.size());
}

struct SemanticInput {
  retrieval::Embedding target;
  std::vector<retrieval::Embedding> recs;  // rank order
};

struct SemanticResult {
  double value = 0.0;
  std::size_t users = 0;     // users contributing to the mean
  std::size_t excluded = 0;  // zero-vector embeddings skipped
};

// Mean over users of the best cosine similarity among the top-10. A user
// with no usable recommendation contributes 0; a zero target vector removes
// the user from the mean.
inline SemanticResult hr10_semantic(std::span<const SemanticInput> users) {
  SemanticResult r;
  double sum = 0.0;
  for (const auto& u : users) {
    if (retrieval::norm(u.target) == 0.0) {
      ++r.excluded;
      continue;
    }
    std::optional<double> best;
    const std::size_t k = std::min(kHitRateK, u.recs.size());
    for (std::size_t i = 0; i < k; ++i) {
      if (retrieval::norm(u.recs[i]) == 0.0) {
        ++r.excluded;
        continue;
      }
      const double c = retrieval::cosine(u.target, u.recs[i]);
      if (!best || c > *best) best = c;
    }
    sum += best.value_or(0.0);
    ++r.users;
  }
  if (r.users > 0) r.value = sum / static_cast<double>(r.users);
  return r;
}

struct CategoryDistribution {
  std::vector<std::string> categories;
  std::vector<double> proportions;
  bool empty = false;  // no recommendations: all-zero vector
};

inline CategoryDistribution distribution(std::span<const std::string> resolved_categories,
                                         const std::vector<std::string>& universe) {
  if (universe.empty()) throw Error(ErrorKind::kShape, "distribution: empty category universe");
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < universe.size(); ++i) slot.emplace(universe[i], i);
  CategoryDistribution d;
  d.categories = universe;
  d.proportions.assign(universe.size(), 0.0);
  if (resolved_categories.empty()) {
    d.empty = true;
    return d;
  }
  std::vector<std::size_t> counts(universe.size(), 0);
  for (const auto& c : resolved_categories) {
    const auto it = slot.find(c);
    if (it == slot.end()) throw Error(ErrorKind::kShape, "category '" + c + "' outside the universe");
    ++counts[it->second];
  }
  const double n = static_cast<double>(resolved_categories.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    d.proportions[i] = static_cast<double>(counts[i]) / n;
  }
  return d;
}

namespace detail {

inline void require_same_universe(const CategoryDistribution& a, const CategoryDistribution& b) {
  if (a.categories != b.categories || a.proportions.size() != b.proportions.size()) {
    throw Error(ErrorKind::kShape, "distributions use different category universes");
  }
}

}  // namespace detail

inline double l1_distance(const CategoryDistribution& base, const CategoryDistribution& sys) {
  detail::require_same_universe(base, sys);
  double s = 0.0;
  for (std::size_t i = 0; i < base.proportions.size(); ++i) {
    s += std::abs(base.proportions[i] - sys.proportions[i]);
  }
  return s;
}

inline double l2_distance(const CategoryDistribution& base, const CategoryDistribution& sys) {
  detail::require_same_universe(base, sys);
  double s = 0.0;
  for (std::size_t i = 0; i < base.proportions.size(); ++i) {
    const double d = base.proportions[i] - sys.proportions[i];
    s += d * d;
  }
  return std::sqrt(s);
}

struct GroupDistance {
  double avg_l1 = 0.0;
  double avg_l2 = 0.0;
  std::size_t categories = 0;
};

struct PerGroupDistances {
  GroupDistance sensitive;
  GroupDistance nonsensitive;
};

// Per-category normalized distances within the sensitive and nonsensitive
// category groups. Sensitive categories absent from the universe are ignored;
// an empty group is an error.
inline PerGroupDistances per_group_distances(const CategoryDistribution& base,
                                             const CategoryDistribution& sys,
                                             const std::vector<std::string>& sensitive_categories) {
  detail::require_same_universe(base, sys);
  const std::set<std::string> sensitive(sensitive_categories.begin(), sensitive_categories.end());
  double abs_s = 0, sq_s = 0, abs_n = 0, sq_n = 0;
  std::size_t n_s = 0, n_n = 0;
  for (std::size_t i = 0; i < base.categories.size(); ++i) {
    const double d = base.proportions[i] - sys.proportions[i];
    if (sensitive.contains(base.categories[i])) {
      abs_s += std::abs(d);
      sq_s += d * d;
      ++n_s;
    } else {
      abs_n += std::abs(d);
      sq_n += d * d;
      ++n_n;
    }
  }
  if (n_s == 0 || n_n == 0) {
    throw Error(ErrorKind::kUndefined, "per-group distances need both category groups nonempty");
  }
  PerGroupDistances r;
  r.sensitive = {abs_s / static_cast<double>(n_s), std::sqrt(sq_s / static_cast<double>(n_s)), n_s};
  r.nonsensitive = {abs_n / static_cast<double>(n_n), std::sqrt(sq_n / static_cast<double>(n_n)),
                    n_n};
  return r;
}

// Percentage of the obfuscation-only distance removed by deobfuscation.
inline double recovery(double d_obf_only, double d_obf_deobf) {
  if (d_obf_only == 0.0) throw Error(ErrorKind::kUndefined, "recovery undefined for zero distance");
  if (!(d_obf_only > 0.0)) throw Error(ErrorKind::kUndefined, "recovery needs a positive distance");
  return 100.0 * (d_obf_only - d_obf_deobf) / d_obf_only;
}

struct Leakage {
  double pl_b = 0.0;
  std::optional<double> pl_s;  // absent without a full set of scores, or when they sum to 0
  std::size_t sensitive_items = 0;
};

// `shared[i]` is true when the i-th ground-truth-sensitive item reached the
// server; `scores`, when given, is index-aligned with `shared`.
inline Leakage privacy_leakage(const std::vector<bool>& shared,
                               const std::optional<std::vector<double>>& scores = std::nullopt) {
  if (shared.empty()) throw Error(ErrorKind::kUndefined, "no ground-truth-sensitive products");
  if (scores && scores->size() != shared.size()) {
    throw Error(ErrorKind::kShape, "leakage flags and scores are not aligned");
  }
  Leakage r;
  r.sensitive_items = shared.size();
  std::size_t leaked = 0;
  for (bool x : shared) leaked += x ? 1 : 0;
  r.pl_b = static_cast<double>(leaked) / static_cast<double>(shared.size());
  if (scores) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < shared.size(); ++i) {
      const double s = (*scores)[i];
      if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorKind::kShape, "sensitivity score outside [0,1]");
      den += s;
      if (shared[i]) num += s;
    }
    if (den > 0.0) r.pl_s = num / den;
  }
  return r;
}

struct ScoreStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

inline std::optional<ScoreStats> score_stats(std::span<const double> scores) {
  if (scores.empty()) return std::nullopt;
  ScoreStats s;
  s.count = scores.size();
  double sum = 0.0;
  for (double x : scores) sum += x;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (double x : scores) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

// Recommendations resolving to a product already recommended to the same
// user.
inline std::size_t duplicate_count(std::span<const std::string> rec_ids) {
  std::set<std::string> seen;
  std::size_t dups = 0;
  for (const auto& id : rec_ids) {
    if (!seen.insert(id).second) ++dups;
  }
  return dups;
}

}  // namespace privrec::evaluation
