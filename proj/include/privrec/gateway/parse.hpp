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
#include <cstdlib>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "privrec/error.hpp"

namespace privrec::gateway {

struct RecommendationEntry {
  std::size_t rank = 0;  // 1-based, contiguous
  std::string text;

  friend bool operator==(const RecommendationEntry&, const RecommendationEntry&) = default;
};

struct ParsedList {
  std::vector<RecommendationEntry> entries;
  std::size_t shortfall = 0;  // expected - parsed, when positive
};

// Extracts "<int><sep> text" lines, sep one of . ) : , with optional leading
// whitespace. Other lines are ignored. Ranks are renumbered 1..n in order of
// appearance. Never invents entries.
inline ParsedList parse_numbered_list(std::string_view raw, std::size_t expected) {
  static const std::regex kLine(R"(^\s*\d+\s*[.):]\s*(.*?)\s*$)");
  ParsedList out;
  std::istringstream in{std::string(raw)};
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!std::regex_match(line, m, kLine)) continue;
    std::string text = m[1].str();
    if (text.empty()) continue;
    out.entries.push_back({out.entries.size() + 1, std::move(text)});
  }
  if (out.entries.empty()) {
    throw ParseError("no numbered entries in response", std::string(raw));
  }
  if (out.entries.size() < expected) out.shortfall = expected - out.entries.size();
  return out;
}

namespace detail {

inline std::string strip_label_noise(std::string_view raw) {
  auto is_noise = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '`';
  };
  std::size_t b = 0, e = raw.size();
  while (b < e && is_noise(raw[b])) ++b;
  while (e > b && is_noise(raw[e - 1])) --e;
  return std::string(raw.substr(b, e - b));
}

}  // namespace detail

// Accepts exactly "sensitive" or "nonsensitive" (any case, surrounding quotes
// and whitespace ignored).
inline bool parse_sensitivity_label(std::string_view raw) {
  std::string s = detail::strip_label_noise(raw);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "sensitive") return true;
  if (s == "nonsensitive") return false;
  throw ParseError("response is not a sensitivity label", std::string(raw));
}

// Accepts a single plain decimal in [0,1].
inline double parse_sensitivity_score(std::string_view raw) {
  static const std::regex kDecimal(R"(^(\d+(\.\d*)?|\.\d+)$)");
  const std::string s = detail::strip_label_noise(raw);
  if (!std::regex_match(s, kDecimal)) {
    throw ParseError("response is not a decimal score", std::string(raw));
  }
  const double v = std::strtod(s.c_str(), nullptr);
  if (v < 0.0 || v > 1.0) throw ParseError("score outside [0,1]", std::string(raw));
  return v;
}

}  // namespace privrec::gateway
