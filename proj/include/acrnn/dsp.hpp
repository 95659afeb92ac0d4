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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace acrnn::dsp {

inline constexpr std::uint32_t kSampleRate = 44100;
inline constexpr std::size_t kFftSize = 1024;  // 23 ms at 44.1 kHz
inline constexpr std::size_t kHop = 512;       // 50% overlap
inline constexpr std::size_t kBins = kFftSize / 2 + 1;
inline constexpr std::size_t kBands = 128;
inline constexpr std::size_t kSegmentFrames = 128;
inline constexpr std::size_t kSegmentHop = 64;
inline constexpr std::size_t kChannels = 2;  // static, delta
inline constexpr std::size_t kSegmentValues = kBands * kSegmentFrames * kChannels;

/// Mono waveform with its dataset tags.
struct WaveClip {
  std::vector<float> samples;  // nominally in [-1, 1]
  std::uint32_t sample_rate = kSampleRate;
  std::uint32_t label = 0;
  std::uint32_t fold = 1;
  std::string clip_id;
};

/// Dense row-major float matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), values(r * c, fill) {}
  float& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  float operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// |STFT|^2, bins x frames.
struct PowerSpectrogram {
  std::size_t n_bins = kBins;
  std::size_t n_frames = 0;
  std::vector<float> values;  // row-major (bin, frame)

  float at(std::size_t bin, std::size_t frame) const { return values[bin * n_frames + frame]; }
};

/// Spectral weighting matrix, bands x bins, with ERB-spaced centers.
struct GammatoneFilterbank {
  std::vector<double> center_frequencies;  // Hz, strictly increasing
  Matrix weights;                          // n_bands x (n_fft / 2 + 1), nonnegative
};

/// One 128-band x 128-frame x {static, delta} network input.
struct LogGTSegment {
  std::string clip_id;
  std::uint32_t segment_index = 0;
  std::uint32_t label = 0;
  std::uint32_t fold = 1;
  std::uint8_t augmentation = 0;  // 0 = original audio, k > 0 = k-th augmented copy
  std::vector<float> values = std::vector<float>(kSegmentValues, 0.0f);  // (band, frame, channel)

  float& at(std::size_t band, std::size_t frame, std::size_t channel) {
    return values[(band * kSegmentFrames + frame) * kChannels + channel];
  }
  float at(std::size_t band, std::size_t frame, std::size_t channel) const {
    return values[(band * kSegmentFrames + frame) * kChannels + channel];
  }
  bool augmented() const { return augmentation != 0; }
};

/// Per-channel global standardization statistics from training data.
struct NormStats {
  std::array<float, kChannels> mean{0.0f, 0.0f};
  std::array<float, kChannels> std{1.0f, 1.0f};
};

/// Frames of a Hamming-windowed STFT: frame f covers samples [512 f, 512 f + 1024).
std::size_t stft_frame_count(std::size_t n_samples);

/// Throws TooShortError for fewer than 1024 samples.
PowerSpectrogram stft_power(std::span<const float> samples);
PowerSpectrogram stft_power(const WaveClip& clip);

double hz_to_erb_rate(double hz);
double erb_rate_to_hz(double erb_rate);

/// 4th-order gammatone power responses sampled at the FFT bin frequencies,
/// centers equally spaced on the ERB-rate scale from 20 Hz toward Nyquist,
/// each row peak-normalized to 1.
GammatoneFilterbank build_gammatone_filterbank(std::size_t n_bands = kBands, double sample_rate = kSampleRate,
                                               std::size_t n_fft = kFftSize);

/// log10(weights * spec + 1e-10), bands x frames.
Matrix log_gt(const PowerSpectrogram& spec, const GammatoneFilterbank& fb);

/// Regression delta over time with half-window 2 and replicated edges.
/// Throws TooShortError for fewer than 5 frames.
Matrix delta(const Matrix& log_spec);

/// 128-frame windows with hop 64; inputs shorter than 128 frames are
/// zero-padded into a single segment. Clip tags are left default.
std::vector<LogGTSegment> segment(const Matrix& static_spec, const Matrix& delta_spec,
                                  std::size_t frames = kSegmentFrames, std::size_t hop = kSegmentHop);

/// Full pipeline for one clip; segments carry the clip's id, label, and fold.
std::vector<LogGTSegment> extract_segments(const WaveClip& clip, const GammatoneFilterbank& fb,
                                           std::uint8_t augmentation = 0);

/// Throws ContractError on an empty set or a zero-variance channel.
NormStats compute_norm_stats(std::span<const LogGTSegment* const> training_segments);

void apply_norm(LogGTSegment& segment, const NormStats& stats);

}  // namespace acrnn::dsp
