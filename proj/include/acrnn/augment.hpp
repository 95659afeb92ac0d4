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
#include <span>
#include <utility>
#include <vector>

#include "acrnn/dsp.hpp"
#include "acrnn/random.hpp"

namespace acrnn::augment {

struct AugmentConfig {
  double stretch_min = 0.8;
  double stretch_max = 1.3;
  double shift_min = -3.5;  // semitones
  double shift_max = 3.5;
  std::size_t copies_per_clip = 2;
  double mixup_alpha = 0.2;
  bool mixup_enabled = true;
  std::uint64_t rng_seed = 0;

  /// Throws ContractError on inverted ranges, non-positive rates, or alpha <= 0.
  void validate() const;
};

struct MixupPair {
  float lambda = 1.0f;
  std::size_t i = 0;
  std::size_t j = 0;
};

/// Phase-vocoder time stretch. rate > 1 shortens; output length is round(N / rate).
dsp::WaveClip time_stretch(const dsp::WaveClip& clip, double rate);
std::vector<float> time_stretch(std::span<const float> samples, double rate);

/// Shift pitch by `semitones` keeping duration: stretch by 2^(-s/12), then
/// resample back to N samples.
dsp::WaveClip pitch_shift(const dsp::WaveClip& clip, double semitones);
std::vector<float> pitch_shift(std::span<const float> samples, double semitones);

/// Linear-interpolation resampling to exactly `length` samples.
std::vector<float> resample_linear(std::span<const float> samples, std::size_t length);

/// The k-th (1-based) augmented copy of a clip: odd k stretch, even k shift.
/// Parameters are drawn from a stream keyed by (seed, clip_id, k), so the
/// result does not depend on which other clips are processed.
dsp::WaveClip augmented_copy(const dsp::WaveClip& clip, const AugmentConfig& config, std::size_t k);

/// x = lambda * xi + (1 - lambda) * xj, elementwise, into `out`.
void mix(std::span<const float> xi, std::span<const float> xj, float lambda, std::span<float> out);

/// Convex combination of a feature/label pair.
std::pair<dsp::LogGTSegment, std::vector<float>> mixup(const dsp::LogGTSegment& xi, const std::vector<float>& yi,
                                                       const dsp::LogGTSegment& xj, const std::vector<float>& yj,
                                                       float lambda);

/// A Beta(alpha, alpha) draw built from two gamma variates.
double sample_lambda(double alpha, Rng& rng);

std::vector<float> one_hot(std::size_t index, std::size_t classes);

}  // namespace acrnn::augment
