// Copyright 2026 The acrnn Authors.
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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acrnn/errors.hpp"

namespace acrnn::io {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

/// Appends little-endian fields to an in-memory buffer.
class ByteWriter {
 public:
  template <typename V>
  void put(V v) {
    static_assert(std::is_trivially_copyable_v<V>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(V));
  }
  void put_bytes(std::string_view bytes) { buf_.append(bytes); }
  void put_floats(std::span<const float> values) {
    buf_.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  }
  /// u16 length followed by the bytes.
  void put_string16(std::string_view s);

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

/// Bounds-checked little-endian reads. Throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  template <typename V>
  V get() {
    V v;
    std::memcpy(&v, take(sizeof(V)), sizeof(V));
    return v;
  }
  std::string_view get_bytes(std::size_t n) { return {take(n), n}; }
  void get_floats(std::span<float> out) { std::memcpy(out.data(), take(out.size_bytes()), out.size_bytes()); }
  std::string get_string16();

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const char* take(std::size_t n);

  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace acrnn::io
