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

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "privrec/error.hpp"

// Little-endian fixed-width helpers for the flat binary file formats.
namespace privrec::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw Error(ErrorKind::kFormat, "truncated binary file");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto len = get<uint32_t>(in);
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw Error(ErrorKind::kFormat, "truncated binary file");
  return s;
}

}  // namespace privrec::binary
