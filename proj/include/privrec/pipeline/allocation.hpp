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
#include <cstddef>

#include "privrec/error.hpp"

namespace privrec::pipeline {

struct Allocation {
  std::size_t n_ns = 0;  // server-side recommendations
  std::size_t n_s = 0;   // on-device recommendations

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

// Splits the recommendation budget in proportion to the sensitive share of
// the history: n_s = round_half_up(n_total * count_s / (count_s + count_ns)),
// raised to 1 whenever count_s > 0, and n_ns = n_total - n_s.
inline Allocation allocate(std::size_t n_total, std::size_t count_s, std::size_t count_ns) {
  if (n_total < 1) throw Error(ErrorKind::kConfig, "allocate: n_total must be >= 1");
  const std::size_t total = count_s + count_ns;
  if (total == 0) throw Error(ErrorKind::kConfig, "allocate: empty history");
  // floor(x + 1/2) with x = n_total * count_s / total, in integers.
  std::size_t n_s = (2 * n_total * count_s + total) / (2 * total);
  if (count_s > 0 && n_s == 0) n_s = 1;
  n_s = std::min(n_s, n_total);
  return {n_total - n_s, n_s};
}

// Extra end-to-end delay relative to sending everything to the server: the
// server and local legs overlap, so only the obfuscator and any local time in
// excess of the server time are added. Written as t_obf + max(0, t_deobf -
// t_rec), which equals t_obf + max(t_rec, t_deobf) - t_rec but cannot round
// below t_obf.
inline double timing_extra(double t_obf, double t_rec, double t_deobf) {
  return t_obf + std::max(0.0, t_deobf - t_rec);
}

}  // namespace privrec::pipeline
