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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "acrnn/dsp.hpp"
#include "acrnn/model.hpp"

namespace acrnn::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  ad::Shape shape;
  std::vector<float> values;
};

/// "ACRN" container of named float tensors. Throws FormatError on bad input.
std::string encode_checkpoint(const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> decode_checkpoint(std::string_view bytes);

struct SavedModel {
  Acrnn<float> model;
  std::optional<dsp::NormStats> norm;
};

/// Model tensors (including BN running statistics), the architecture, and
/// optionally the normalization statistics used to train it.
void save_model(const std::filesystem::path& path, const Acrnn<float>& model,
                const std::optional<dsp::NormStats>& norm);
SavedModel load_model(const std::filesystem::path& path);

std::vector<CheckpointEntry> model_entries(const Acrnn<float>& model, const std::optional<dsp::NormStats>& norm);
SavedModel model_from_entries(const std::vector<CheckpointEntry>& entries);

}  // namespace acrnn::model
