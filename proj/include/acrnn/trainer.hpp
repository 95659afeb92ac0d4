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
#include <set>
#include <span>
#include <string>
#include <vector>

#include "acrnn/augment.hpp"
#include "acrnn/dsp.hpp"
#include "acrnn/model.hpp"

namespace acrnn::train {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 300;
  double lr0 = 0.01;
  double lr_decay_factor = 10.0;
  std::size_t lr_decay_every = 100;
  double momentum = 0.9;
  double l2_coeff = 1e-4;
  std::uint64_t seed = 0;
  /// Train on the stretched/shifted copies present in the segment set.
  bool use_augmented_segments = true;
  augment::AugmentConfig augmentation;

  void validate() const;
};

/// lr0 / factor^floor(epoch / decay_every). Throws ContractError past the last epoch.
double lr_schedule(std::size_t epoch, const TrainConfig& config);

template <typename T>
struct ParamSlot {
  ad::Tensor<T> tensor;
  bool decay = false;  // coupled L2 applies to weights only
};

template <typename T>
struct OptimizerState {
  std::vector<std::vector<T>> velocity;
};

/// g' = g + l2 * w (decayed slots only); v = mu v - lr g'; w += mu v - lr g'.
/// Velocities are created zeroed on first use. Tensors without a gradient
/// are treated as having a zero gradient.
template <typename T>
void sgd_nesterov_step(std::span<ParamSlot<T>> params, OptimizerState<T>& state, double lr, double momentum,
                       double l2_coeff);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;  // NaN without a held-out fold
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;  // mean cross-entropy of every step, in order

  std::string to_csv() const;
};

/// Which clips touched each stage of training; filled as training runs.
struct LeakageAudit {
  std::set<std::string> gradient_clips;
  std::set<std::string> norm_clips;
  std::set<std::string> augmented_clips;
  std::set<std::string> validation_clips;
};

struct TrainOptions {
  std::optional<std::filesystem::path> output_dir;  // ckpt_best, ckpt_final, history.csv
  std::function<void(const EpochRecord&)> on_epoch;
  std::size_t max_steps = 0;  // 0 = no cap
};

struct TrainResult {
  model::Acrnn<float> final_model;
  model::Acrnn<float> best_model;
  dsp::NormStats norm;
  TrainHistory history;
  LeakageAudit audit;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
};

/// Trains on every segment outside `held_out_fold` (0 = use all folds) and
/// validates on the held-out fold's original (non-augmented) segments.
TrainResult train(const std::vector<dsp::LogGTSegment>& segments, const model::AcrnnConfig& model_config,
                  const TrainConfig& config, std::uint32_t held_out_fold, const TrainOptions& options = {});

/// Normalized N x 128 x 128 x 2 input for a list of segments.
ad::Tensor<float> batch_tensor(std::span<const dsp::LogGTSegment* const> segments, const dsp::NormStats& norm);

}  // namespace acrnn::train
