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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acrnn/dsp.hpp"
#include "acrnn/model.hpp"
#include "acrnn/trainer.hpp"

namespace acrnn::eval {

/// Mean of the probability vectors, then argmax (lowest index on ties).
/// Throws ContractError when `segment_probs` is empty.
std::pair<std::size_t, std::vector<double>> average_and_argmax(const std::vector<std::vector<double>>& segment_probs);

/// Classifies one clip from its segments (raw values; `norm` is applied here).
std::pair<std::size_t, std::vector<double>> predict_clip(model::Acrnn<float>& net,
                                                         std::span<const dsp::LogGTSegment* const> segments,
                                                         const dsp::NormStats& norm);

struct ClipPrediction {
  std::string clip_id;
  std::uint32_t truth = 0;
  std::uint32_t predicted = 0;
  std::vector<double> probs;
};

/// Predicts every clip among `segments` (grouped by clip_id, sorted by id).
std::vector<ClipPrediction> predict_clips(model::Acrnn<float>& net, std::span<const dsp::LogGTSegment* const> segments,
                                          const dsp::NormStats& norm);

double accuracy(const std::vector<ClipPrediction>& predictions);

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

/// Rows are true classes, columns predictions. Throws ContractError on
/// length mismatch or an index outside [0, K).
ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& truths,
                                 std::size_t num_classes);

struct FoldResult {
  std::uint32_t fold = 0;
  double accuracy = 0.0;       // final-epoch weights
  double best_accuracy = 0.0;  // best-validation weights
  std::vector<ClipPrediction> predictions;
  ConfusionMatrix confusion;
  train::LeakageAudit audit;
};

struct EvalReport {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double mean_best_accuracy = 0.0;
  ConfusionMatrix confusion;  // summed over folds

  /// fold,clips,accuracy,best_accuracy rows followed by a mean row.
  std::string to_csv() const;
};

struct CvOptions {
  std::optional<std::filesystem::path> output_dir;  // per-fold checkpoints and histories
  std::function<void(std::uint32_t fold, const train::EpochRecord&)> on_epoch;
};

/// One model per fold, trained on the other folds with seed base + fold and
/// evaluated on the held-out fold's original segments. Throws ContractError
/// when a requested fold has no clips, and std::logic_error if any held-out
/// clip reaches training, normalization, or augmentation.
EvalReport cross_validate(const std::vector<dsp::LogGTSegment>& segments, const model::AcrnnConfig& model_config,
                          const train::TrainConfig& config, const std::vector<std::uint32_t>& folds = {1, 2, 3, 4, 5},
                          const CvOptions& options = {});

std::string confusion_csv(const ConfusionMatrix& m, const std::vector<std::string>& class_names);

struct AblationRow {
  std::string label;
  double accuracy = 0.0;
  double best_accuracy = 0.0;
};

/// "no attention", "attention at l2", ..., "attention at l10".
std::string placement_label(model::Placement p);

/// Cross-validates each placement with an otherwise identical config and seed.
std::vector<AblationRow> ablate_placements(const std::vector<dsp::LogGTSegment>& segments,
                                           const model::AcrnnConfig& model_config, const train::TrainConfig& config,
                                           const std::vector<model::Placement>& placements,
                                           const std::vector<std::uint32_t>& folds = {1, 2, 3, 4, 5},
                                           const CvOptions& options = {});

/// Rows base, attention, augment, attention+augment. "attention" places it at
/// l10; "augment" turns on stretched/shifted copies and mixup.
std::vector<AblationRow> ablate_grid(const std::vector<dsp::LogGTSegment>& segments,
                                     const model::AcrnnConfig& model_config, const train::TrainConfig& config,
                                     const std::vector<std::uint32_t>& folds = {1, 2, 3, 4, 5},
                                     const CvOptions& options = {});

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace acrnn::eval
