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

// Brute-force reference implementations of the evaluation metrics, written
// independently of privrec/evaluation/metrics.hpp, plus a randomized
// equivalence harness used by the tests and by `privrec selfcheck`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "privrec/evaluation/metrics.hpp"

namespace privrec::testing {

namespace oracle {

inline double pl_b(const std::vector<bool>& x) {
  const auto leaked = std::count(x.begin(), x.end(), true);
  return static_cast<double>(leaked) / static_cast<double>(x.size());
}

inline std::optional<double> pl_s(const std::vector<bool>& x, const std::vector<double>& s) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] ? 1.0 : 0.0) * s[i];
    den += s[i];
  }
  if (den == 0) return std::nullopt;
  return num / den;
}

inline std::vector<double> distribution(const std::vector<std::string>& cats,
                                        const std::vector<std::string>& universe) {
  std::vector<double> v;
  for (const auto& u : universe) {
    const auto c = std::count(cats.begin(), cats.end(), u);
    v.push_back(cats.empty() ? 0.0 : static_cast<double>(c) / static_cast<double>(cats.size()));
  }
  return v;
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(a[i] - b[i], 2);
  return std::sqrt(s);
}

// {avg_l1, avg_l2} over the indices selected by `in_group`.
inline std::pair<double, double> group(const std::vector<double>& a, const std::vector<double>& b,
                                       const std::vector<bool>& in_group) {
  double s1 = 0, s2 = 0;
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!in_group[i]) continue;
    s1 += std::fabs(a[i] - b[i]);
    s2 += std::pow(a[i] - b[i], 2);
    ++n;
  }
  return {s1 / n, std::sqrt(s2 / n)};
}

inline double hit_rate(const std::vector<std::string>& targets,
                       const std::vector<std::vector<std::string>>& recs) {
  int hits = 0;
  for (std::size_t u = 0; u < targets.size(); ++u) {
    const auto& r = recs[u];
    const auto end = r.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(10, r.size()));
    if (std::find(r.begin(), end, targets[u]) != end) ++hits;
  }
  return targets.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(targets.size());
}

inline double cos(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

inline double semantic(const std::vector<std::vector<double>>& targets,
                       const std::vector<std::vector<std::vector<double>>>& recs) {
  double total = 0;
  for (std::size_t u = 0; u < targets.size(); ++u) {
    double best = 0;
    bool any = false;
    for (std::size_t i = 0; i < recs[u].size() && i < 10; ++i) {
      const double c = cos(targets[u], recs[u][i]);
      if (!any || c > best) best = c;
      any = true;
    }
    total += any ? best : 0.0;
  }
  return targets.empty() ? 0.0 : total / static_cast<double>(targets.size());
}

}  // namespace oracle

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t mismatches = 0;
  double max_abs_diff = 0.0;

  bool passed() const { return mismatches == 0; }
};

inline constexpr double kOracleTolerance = 1e-12;

namespace detail {

class Tracker {
 public:
  explicit Tracker(std::string name) { r_.name = std::move(name); }
  void compare(double got, double want) {
    const double d = std::fabs(got - want);
    r_.max_abs_diff = std::max(r_.max_abs_diff, d);
    if (!(d <= kOracleTolerance)) ++r_.mismatches;
  }
  void mismatch() { ++r_.mismatches; }
  void next() { ++r_.instances; }
  SuiteResult result() const { return r_; }

 private:
  SuiteResult r_;
};

inline std::vector<std::string> make_universe(std::size_t n) {
  std::vector<std::string> u;
  for (std::size_t i = 0; i < n; ++i) u.push_back("cat" + std::to_string(i));
  return u;
}

}  // namespace detail

// Runs each metric against its oracle on `instances` random small instances
// (at most 12 categories and 50 users).
inline std::vector<SuiteResult> run_metric_oracle_suites(uint64_t seed, std::size_t instances) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto real = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };

  detail::Tracker pl_b("privacy_leakage.pl_b"), pl_s("privacy_leakage.pl_s");
  detail::Tracker dist("distribution"), l1("l1_distance"), l2("l2_distance");
  detail::Tracker group("per_group_distances"), hr_exact("hr10_exact"), hr_cat("hr10_category");
  detail::Tracker hr_sem("hr10_semantic");

  for (std::size_t it = 0; it < instances; ++it) {
    // Leakage.
    {
      pl_b.next();
      pl_s.next();
      const std::size_t n = uniform(1, 60);
      std::vector<bool> x(n);
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = uniform(0, 1) == 1;
        s[i] = uniform(0, 9) == 0 ? 0.0 : real();
      }
      const auto got = evaluation::privacy_leakage(x, s);
      pl_b.compare(got.pl_b, oracle::pl_b(x));
      const auto want = oracle::pl_s(x, s);
      if (got.pl_s.has_value() != want.has_value()) {
        pl_s.mismatch();
      } else if (want) {
        pl_s.compare(*got.pl_s, *want);
      }
    }
    // Distributions and distances.
    const std::size_t n_cat = uniform(2, 12);
    const auto universe = detail::make_universe(n_cat);
    auto random_cats = [&](std::size_t n) {
      std::vector<std::string> c;
      for (std::size_t i = 0; i < n; ++i) c.push_back(universe[uniform(0, n_cat - 1)]);
      return c;
    };
    {
      dist.next();
      l1.next();
      l2.next();
      group.next();
      const auto a_cats = random_cats(uniform(1, 80));
      const auto b_cats = random_cats(uniform(0, 80));
      const auto a = evaluation::distribution(a_cats, universe);
      const auto b = evaluation::distribution(b_cats, universe);
      const auto oa = oracle::distribution(a_cats, universe);
      const auto ob = oracle::distribution(b_cats, universe);
      for (std::size_t i = 0; i < n_cat; ++i) {
        dist.compare(a.proportions[i], oa[i]);
        dist.compare(b.proportions[i], ob[i]);
      }
      if (b.empty != b_cats.empty()) dist.mismatch();
      l1.compare(evaluation::l1_distance(a, b), oracle::l1(oa, ob));
      l2.compare(evaluation::l2_distance(a, b), oracle::l2(oa, ob));

      const std::size_t n_sens = uniform(1, n_cat - 1);
      std::vector<std::string> sensitive;
      std::vector<bool> is_s(n_cat, false);
      for (std::size_t i = 0; i < n_sens; ++i) {
        sensitive.push_back(universe[i]);
        is_s[i] = true;
      }
      std::vector<bool> is_n(n_cat);
      for (std::size_t i = 0; i < n_cat; ++i) is_n[i] = !is_s[i];
      const auto g = evaluation::per_group_distances(a, b, sensitive);
      const auto [s1, s2] = oracle::group(oa, ob, is_s);
      const auto [n1, n2] = oracle::group(oa, ob, is_n);
      group.compare(g.sensitive.avg_l1, s1);
      group.compare(g.sensitive.avg_l2, s2);
      group.compare(g.nonsensitive.avg_l1, n1);
      group.compare(g.nonsensitive.avg_l2, n2);
    }
    // Hit rates.
    {
      hr_exact.next();
      hr_cat.next();
      hr_sem.next();
      const std::size_t users = uniform(1, 50);
      std::vector<evaluation::UserOutcome> outcomes;
      std::vector<std::string> t_ids, t_cats;
      std::vector<std::vector<std::string>> r_ids, r_cats;
      std::vector<evaluation::SemanticInput> sem;
      std::vector<std::vector<double>> o_targets;
      std::vector<std::vector<std::vector<double>>> o_recs;
      const std::size_t dim = uniform(2, 16);
      auto vec = [&] {
        std::vector<double> v(dim);
        for (auto& x : v) x = real() * 2.0 - 1.0;
        v[uniform(0, dim - 1)] += 0.5;  // keep away from the zero vector
        return v;
      };
      for (std::size_t u = 0; u < users; ++u) {
        evaluation::UserOutcome o;
        o.target_id = "p" + std::to_string(uniform(0, 30));
        o.target_category = universe[uniform(0, n_cat - 1)];
        const std::size_t k = uniform(0, 14);
        for (std::size_t i = 0; i < k; ++i) {
          o.rec_ids.push_back("p" + std::to_string(uniform(0, 30)));
          o.rec_categories.push_back(universe[uniform(0, n_cat - 1)]);
        }
        t_ids.push_back(o.target_id);
        t_cats.push_back(o.target_category);
        r_ids.push_back(o.rec_ids);
        r_cats.push_back(o.rec_categories);
        outcomes.push_back(std::move(o));

        evaluation::SemanticInput si;
        auto tv = vec();
        si.target.values = tv;
        o_targets.push_back(tv);
        o_recs.emplace_back();
        for (std::size_t i = 0; i < k; ++i) {
          auto rv = vec();
          si.recs.push_back({rv});
          o_recs.back().push_back(rv);
        }
        sem.push_back(std::move(si));
      }
      hr_exact.compare(evaluation::hr10_exact(outcomes), oracle::hit_rate(t_ids, r_ids));
      hr_cat.compare(evaluation::hr10_category(outcomes), oracle::hit_rate(t_cats, r_cats));
      hr_sem.compare(evaluation::hr10_semantic(sem).value, oracle::semantic(o_targets, o_recs));
    }
  }
  return {pl_b.result(), pl_s.result(), dist.result(), l1.result(), l2.result(),
          group.result(), hr_exact.result(), hr_cat.result(), hr_sem.result()};
}

}  // namespace privrec::testing
