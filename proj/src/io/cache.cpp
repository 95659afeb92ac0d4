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
#include <exception>
#include <tuple>

#include "acrnn/binary_io.hpp"
#include "acrnn/dataset.hpp"
#include "acrnn/errors.hpp"

namespace acrnn::data {

namespace {
constexpr std::string_view kMagic = "LGT1";
}

void sort_segments(std::vector<dsp::LogGTSegment>& segments) {
  std::stable_sort(segments.begin(), segments.end(), [](const auto& a, const auto& b) {
    return std::tie(a.clip_id, a.augmentation, a.segment_index) < std::tie(b.clip_id, b.augmentation, b.segment_index);
  });
}

std::string encode_cache(const std::vector<dsp::LogGTSegment>& segments, std::uint32_t version) {
  if (version != 1 && version != 2) throw ContractError("encode_cache: version must be 1 or 2");
  io::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(version);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(segments.size()));
  for (const auto& s : segments) {
    if (s.values.size() != dsp::kSegmentValues) throw DimensionError("encode_cache: segment of wrong size");
    w.put_string16(s.clip_id);
    w.put<std::uint32_t>(s.segment_index);
    w.put<std::uint32_t>(s.label);
    w.put<std::uint32_t>(s.fold);
    w.put_floats(s.values);
    if (version == 2) w.put<std::uint8_t>(s.augmentation);
  }
  return w.bytes();
}

std::vector<dsp::LogGTSegment> decode_cache(std::string_view bytes) {
  io::ByteReader r(bytes, "feature cache");
  if (r.get_bytes(4) != kMagic) throw FormatError("feature cache: bad magic (not an LGT1 file)");
  const auto version = r.get<std::uint32_t>();
  if (version != 1 && version != 2) throw FormatError("feature cache: unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<dsp::LogGTSegment> out;
  out.reserve(std::min<std::size_t>(count, r.remaining() / (dsp::kSegmentValues * sizeof(float))));
  for (std::uint32_t i = 0; i < count; ++i) {
    dsp::LogGTSegment s;
    s.clip_id = r.get_string16();
    s.segment_index = r.get<std::uint32_t>();
    s.label = r.get<std::uint32_t>();
    s.fold = r.get<std::uint32_t>();
    r.get_floats(s.values);
    if (version == 2) s.augmentation = r.get<std::uint8_t>();
    out.push_back(std::move(s));
  }
  if (!r.done()) throw FormatError("feature cache: trailing bytes after last segment");
  return out;
}

void write_cache(const std::filesystem::path& path, const std::vector<dsp::LogGTSegment>& segments) {
  io::write_file_atomic(path, encode_cache(segments));
}

std::vector<dsp::LogGTSegment> read_cache(const std::filesystem::path& path) { return decode_cache(io::read_file(path)); }

std::vector<dsp::LogGTSegment> extract_clip(const dsp::WaveClip& clip, const dsp::GammatoneFilterbank& fb,
                                            const ExtractOptions& options) {
  auto out = dsp::extract_segments(clip, fb, 0);
  if (options.augment) {
    if (options.augment_config.copies_per_clip > 255) throw ContractError("extract: at most 255 augmented copies");
    for (std::size_t k = 1; k <= options.augment_config.copies_per_clip; ++k) {
      const auto copy = augment::augmented_copy(clip, options.augment_config, k);
      auto segs = dsp::extract_segments(copy, fb, static_cast<std::uint8_t>(k));
      out.insert(out.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
    }
  }
  return out;
}

std::vector<dsp::LogGTSegment> build_segments(const Metadata& metadata, const std::filesystem::path& data_dir,
                                              const ExtractOptions& options) {
  if (options.augment) options.augment_config.validate();
  const auto fb = dsp::build_gammatone_filterbank();
  const std::size_t n = metadata.records.size();
  std::vector<std::vector<dsp::LogGTSegment>> per_clip(n);
  std::vector<std::string> errors(n);
  std::size_t done = 0;

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = metadata.records[i];
    try {
      auto clip = read_wav(data_dir / rec.filename);
      clip.clip_id = rec.clip_id();
      clip.label = rec.target;
      clip.fold = rec.fold;
      per_clip[i] = extract_clip(clip, fb, options);
    } catch (const std::exception& e) {
      errors[i] = rec.filename + ": " + e.what();
    }
    if (options.progress) {
#pragma omp critical(acrnn_extract_progress)
      options.progress(++done, n);
    }
  }

  std::string failed;
  for (const auto& e : errors)
    if (!e.empty()) failed += "\n  " + e;
  if (!failed.empty()) throw std::runtime_error("feature extraction failed for:" + failed);

  std::vector<dsp::LogGTSegment> out;
  for (auto& v : per_clip) out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  sort_segments(out);
  return out;
}

void build_cache(const Metadata& metadata, const std::filesystem::path& data_dir, const ExtractOptions& options,
                 const std::filesystem::path& output) {
  write_cache(output, build_segments(metadata, data_dir, options));
}

}  // namespace acrnn::data
