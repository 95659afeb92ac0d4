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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acrnn/dataset.hpp"
#include "acrnn/model.hpp"
#include "acrnn/trainer.hpp"

namespace acrnn::config {

struct RunConfig {
  std::string meta_path;
  std::string data_dir;
  data::Variant variant = data::Variant::Esc10;
  bool extract_augment = true;
  std::vector<std::uint32_t> folds{1, 2, 3, 4, 5};
  train::TrainConfig train;  // includes the augmentation settings
  model::AcrnnConfig model;  // num_classes 0 = infer from the data variant
  std::string output_dir = ".";
  std::uint64_t seed = 0;

  /// Copies the run seed into the trainer and augmentation settings.
  void apply_seed();
  /// K from the config, else 1 + the largest label in the segments.
  std::size_t resolve_classes(const std::vector<dsp::LogGTSegment>& segments) const;
};

/// `key = value` lines; keys are dotted (train.lr0) or grouped under
/// [section] headers. Unknown keys and malformed values are rejected.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Replaces the named settings (dotted keys) and re-validates.
RunConfig apply_overrides(const RunConfig& base, const std::vector<std::pair<std::string, std::string>>& overrides);

/// Every setting as (dotted key, value), in a fixed order; parsing the
/// result reproduces the config exactly.
std::vector<std::pair<std::string, std::string>> run_config_entries(const RunConfig& config);
std::string format_run_config(const RunConfig& config);

inline constexpr std::uint32_t kManifestVersion = 1;

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> args;  // flag name without dashes, value
  RunConfig config;
};

/// command, arg.*, config.*, format versions, and the seed, one per line.
std::string format_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);
/// Writes <dir>/<command>.manifest and returns its path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const Manifest& manifest);

}  // namespace acrnn::config
