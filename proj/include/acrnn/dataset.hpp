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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "acrnn/augment.hpp"
#include "acrnn/dsp.hpp"

namespace acrnn::data {

enum class Variant { Esc10, Esc50, Custom };

Variant parse_variant(const std::string& text);
std::string variant_name(Variant v);

struct ClipRecord {
  std::string filename;
  std::uint32_t fold = 1;
  std::uint32_t target = 0;
  std::string category;

  /// Filename without directory or extension.
  std::string clip_id() const;
};

struct Metadata {
  std::vector<ClipRecord> records;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;  // indexed by target
};

/// ESC-style metadata CSV (filename, fold, target, category, and for esc10 an
/// esc10 flag column). esc10 keeps flagged rows and remaps targets to 0..9 in
/// ascending original order. Throws ParseError naming the offending line.
Metadata parse_metadata(std::string_view csv, Variant variant);
Metadata load_metadata(const std::filesystem::path& path, Variant variant);

/// RIFF/WAVE, PCM 16-bit or 32-bit float, 1-2 channels. Stereo is averaged;
/// other sample rates are linearly resampled to 44.1 kHz with a warning.
/// Throws DecodeError with the byte offset of the problem.
dsp::WaveClip decode_wav(std::string_view bytes);
dsp::WaveClip read_wav(const std::filesystem::path& path);

enum class WavEncoding { Pcm16, Float32 };
std::string encode_wav(const std::vector<std::vector<float>>& channels, std::uint32_t sample_rate,
                       WavEncoding encoding = WavEncoding::Pcm16);
void write_wav(const std::filesystem::path& path, const std::vector<float>& mono,
               std::uint32_t sample_rate = dsp::kSampleRate);

inline constexpr std::uint32_t kCacheVersion = 2;

/// LGT1 feature cache. Version 1 has no augmentation byte; version 2 appends
/// one after each segment's floats. Throws FormatError on bad input.
std::string encode_cache(const std::vector<dsp::LogGTSegment>& segments, std::uint32_t version = kCacheVersion);
std::vector<dsp::LogGTSegment> decode_cache(std::string_view bytes);
void write_cache(const std::filesystem::path& path, const std::vector<dsp::LogGTSegment>& segments);
std::vector<dsp::LogGTSegment> read_cache(const std::filesystem::path& path);

/// Orders by clip_id, augmentation copy, then segment index.
void sort_segments(std::vector<dsp::LogGTSegment>& segments);

struct ExtractOptions {
  bool augment = false;  // add augment.copies_per_clip stretched/shifted copies
  augment::AugmentConfig augment_config;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Segments of each clip (original and, optionally, augmented copies).
std::vector<dsp::LogGTSegment> extract_clip(const dsp::WaveClip& clip, const dsp::GammatoneFilterbank& fb,
                                            const ExtractOptions& options);

/// Reads, tags and extracts every record. Errors name the failing file.
std::vector<dsp::LogGTSegment> build_segments(const Metadata& metadata, const std::filesystem::path& data_dir,
                                              const ExtractOptions& options);

/// build_segments followed by an atomic write of the cache.
void build_cache(const Metadata& metadata, const std::filesystem::path& data_dir, const ExtractOptions& options,
                 const std::filesystem::path& output);

}  // namespace acrnn::data
