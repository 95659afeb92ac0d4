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

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>

#include <boost/tokenizer.hpp>

#include "acrnn/binary_io.hpp"
#include "acrnn/dataset.hpp"
#include "acrnn/errors.hpp"

namespace acrnn::data {

namespace {

constexpr std::uint32_t kFolds = 5;

std::vector<std::string> split_csv_line(const std::string& line) {
  using Sep = boost::escaped_list_separator<char>;
  boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
  return {tok.begin(), tok.end()};
}

std::uint32_t parse_uint(const std::string& text, const char* column, std::size_t line) {
  std::uint32_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ParseError(std::string("column '") + column + "' is not a non-negative integer: '" + text + "'", line);
  }
  return v;
}

bool parse_flag(const std::string& text, std::size_t line) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ParseError("column 'esc10' is not a boolean: '" + text + "'", line);
}

}  // namespace

Variant parse_variant(const std::string& text) {
  if (text == "esc10") return Variant::Esc10;
  if (text == "esc50") return Variant::Esc50;
  if (text == "custom") return Variant::Custom;
  throw ContractError("unknown dataset variant '" + text + "' (expected esc10, esc50 or custom)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Esc10: return "esc10";
    case Variant::Esc50: return "esc50";
    default: return "custom";
  }
}

std::string ClipRecord::clip_id() const { return std::filesystem::path(filename).stem().string(); }

Metadata parse_metadata(std::string_view csv, Variant variant) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::size_t line_no = 0, pos = 0;
  while (pos <= csv.size()) {
    const std::size_t nl = csv.find('\n', pos);
    std::string line(csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.emplace_back(line_no, std::move(line));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (lines.empty()) throw ParseError("metadata is empty", 1);

  const auto header = split_csv_line(lines.front().second);
  auto column = [&](const char* name, bool required) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    if (required) throw ParseError(std::string("metadata header lacks column '") + name + "'", lines.front().first);
    return std::nullopt;
  };
  const std::size_t c_file = *column("filename", true), c_fold = *column("fold", true),
                    c_target = *column("target", true), c_cat = *column("category", true);
  const auto c_esc10 = column("esc10", variant == Variant::Esc10);

  Metadata meta;
  std::map<std::string, std::size_t> seen;  // filename -> line
  std::map<std::uint32_t, std::string> names;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [no, text] = lines[i];
    const auto cells = split_csv_line(text);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()),
                       no);
    }
    if (variant == Variant::Esc10 && !parse_flag(cells[*c_esc10], no)) continue;
    ClipRecord r;
    r.filename = cells[c_file];
    if (r.filename.empty()) throw ParseError("empty filename", no);
    r.fold = parse_uint(cells[c_fold], "fold", no);
    r.target = parse_uint(cells[c_target], "target", no);
    r.category = cells[c_cat];
    if (r.fold < 1 || r.fold > kFolds) throw ParseError("fold " + std::to_string(r.fold) + " outside 1-5", no);
    if (variant == Variant::Esc50 && r.target >= 50) {
      throw ParseError("target " + std::to_string(r.target) + " outside 0-49", no);
    }
    if (const auto [it, fresh] = seen.emplace(r.filename, no); !fresh) {
      throw ParseError("duplicate filename '" + r.filename + "' (first listed on line " + std::to_string(it->second) +
                           ")",
                       no);
    }
    if (const auto [it, fresh] = names.emplace(r.target, r.category); !fresh && it->second != r.category) {
      throw ParseError("target " + std::to_string(r.target) + " is named both '" + it->second + "' and '" +
                           r.category + "'",
                       no);
    }
    meta.records.push_back(std::move(r));
  }
  if (meta.records.empty()) throw ParseError("metadata lists no clips", lines.front().first);

  switch (variant) {
    case Variant::Esc10: {
      if (names.size() > 10) {
        throw ParseError("esc10 subset flags " + std::to_string(names.size()) + " classes", lines.front().first);
      }
      std::map<std::uint32_t, std::uint32_t> remap;
      for (const auto& [target, name] : names) remap.emplace(target, static_cast<std::uint32_t>(remap.size()));
      for (auto& r : meta.records) r.target = remap.at(r.target);
      meta.num_classes = 10;
      break;
    }
    case Variant::Esc50: meta.num_classes = 50; break;
    case Variant::Custom:
      meta.num_classes = names.rbegin()->first + 1;
      if (meta.num_classes < 2) throw ParseError("custom dataset needs at least two classes", lines.front().first);
      break;
  }
  meta.class_names.assign(meta.num_classes, "");
  for (const auto& r : meta.records) meta.class_names[r.target] = r.category;
  for (std::size_t k = 0; k < meta.num_classes; ++k) {
    if (meta.class_names[k].empty()) meta.class_names[k] = "class" + std::to_string(k);
  }
  return meta;
}

Metadata load_metadata(const std::filesystem::path& path, Variant variant) {
  return parse_metadata(io::read_file(path), variant);
}

}  // namespace acrnn::data
