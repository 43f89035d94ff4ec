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
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "httplib.h"
#include "json.hpp"
#include "privrec/error.hpp"

namespace privrec::http {

struct BaseUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // "" or "/prefix" without trailing slash
};

inline BaseUrl parse_base_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorKind::kConfig, "base URL needs a scheme: " + std::string(url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorKind::kConfig, "unsupported URL scheme: " + std::string(url));
  }
  const auto host_begin = scheme_end + 3;
  const auto path_begin = url.find('/', host_begin);
  BaseUrl out;
  out.origin = std::string(url.substr(0, path_begin));
  if (out.origin.size() <= host_begin) {
    throw Error(ErrorKind::kConfig, "base URL has no host: " + std::string(url));
  }
  if (path_begin != std::string_view::npos) {
    out.path_prefix = std::string(url.substr(path_begin));
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
      out.path_prefix.pop_back();
    }
  }
  return out;
}

struct Options {
  double timeout_seconds = 30.0;
  std::optional<std::string> bearer_token;
};

// POSTs a JSON body to base_url + path and returns the parsed JSON response.
// Failure categories: transport (no response), protocol (non-2xx status or a
// body that is not JSON).
inline nlohmann::json post_json(std::string_view base_url, std::string_view path,
                                const nlohmann::json& body, const Options& options) {
  const BaseUrl base = parse_base_url(base_url);
  httplib::Client client(base.origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(options.timeout_seconds));
  const auto secs = static_cast<time_t>(timeout.count() / 1000000);
  const auto usecs = static_cast<time_t>(timeout.count() % 1000000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (options.bearer_token) {
    headers.emplace("Authorization", "Bearer " + *options.bearer_token);
  }
  const std::string full_path = base.path_prefix + std::string(path);
  auto res = client.Post(full_path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::kTransport,
                "POST " + base.origin + full_path + " failed: " + httplib::to_string(res.error()),
                /*retry_safe=*/true);
  }
  if (res->status < 200 || res->status >= 300) {
    const bool retry_safe = res->status == 429 || res->status >= 500;
    throw Error(ErrorKind::kProtocol,
                "POST " + base.origin + full_path + " returned HTTP " + std::to_string(res->status),
                retry_safe);
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(ErrorKind::kProtocol, "response from " + base.origin + full_path + " is not JSON");
  }
  return parsed;
}

}  // namespace privrec::http
