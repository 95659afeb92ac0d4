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
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "acrnn/dsp.hpp"
#include "acrnn/errors.hpp"
#include "acrnn/fft.hpp"

namespace acrnn::dsp {

namespace {

constexpr double kLogFloor = 1e-10;
constexpr double kLowestCenterHz = 20.0;
constexpr int kGammatoneOrder = 4;

// Periodic Hamming window.
const std::vector<double>& hamming_window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kFftSize);
    for (std::size_t n = 0; n < kFftSize; ++n) {
      v[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(kFftSize));
    }
    return v;
  }();
  return w;
}

}  // namespace

std::size_t stft_frame_count(std::size_t n_samples) {
  if (n_samples < kFftSize) return 0;
  return (n_samples - kFftSize) / kHop + 1;
}

PowerSpectrogram stft_power(std::span<const float> samples) {
  if (samples.size() < kFftSize) {
    throw TooShortError("stft_power: clip has " + std::to_string(samples.size()) + " samples, need at least " +
                        std::to_string(kFftSize));
  }
  PowerSpectrogram spec;
  spec.n_frames = stft_frame_count(samples.size());
  spec.values.assign(kBins * spec.n_frames, 0.0f);
  RealFft fft(kFftSize);
  const auto& window = hamming_window();
  std::vector<double> frame(kFftSize);
  std::vector<std::complex<double>> bins(kBins);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    const float* src = samples.data() + f * kHop;
    for (std::size_t n = 0; n < kFftSize; ++n) frame[n] = static_cast<double>(src[n]) * window[n];
    fft.forward(frame, bins);
    for (std::size_t k = 0; k < kBins; ++k) spec.values[k * spec.n_frames + f] = static_cast<float>(std::norm(bins[k]));
  }
  return spec;
}

PowerSpectrogram stft_power(const WaveClip& clip) { return stft_power(std::span<const float>(clip.samples)); }

double hz_to_erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }

double erb_rate_to_hz(double erb_rate) { return (std::pow(10.0, erb_rate / 21.4) - 1.0) / 0.00437; }

GammatoneFilterbank build_gammatone_filterbank(std::size_t n_bands, double sample_rate, std::size_t n_fft) {
  if (n_bands == 0) throw ContractError("build_gammatone_filterbank: n_bands must be >= 1");
  const std::size_t n_bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double lo = hz_to_erb_rate(kLowestCenterHz);
  const double hi = hz_to_erb_rate(nyquist);
  const double step = (hi - lo) / static_cast<double>(n_bands);

  GammatoneFilterbank fb;
  fb.weights = Matrix(n_bands, n_bins);
  fb.center_frequencies.resize(n_bands);
  for (std::size_t b = 0; b < n_bands; ++b) {
    const double fc = erb_rate_to_hz(lo + step * static_cast<double>(b));
    fb.center_frequencies[b] = fc;
    const double bandwidth = 1.019 * 24.7 * (4.37e-3 * fc + 1.0);
    double peak = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      const double x = (f - fc) / bandwidth;
      const double response = std::pow(1.0 + x * x, -kGammatoneOrder);
      fb.weights(b, k) = static_cast<float>(response);
      peak = std::max(peak, response);
    }
    for (std::size_t k = 0; k < n_bins; ++k) fb.weights(b, k) = static_cast<float>(fb.weights(b, k) / peak);
  }
  return fb;
}

Matrix log_gt(const PowerSpectrogram& spec, const GammatoneFilterbank& fb) {
  if (fb.weights.cols != spec.n_bins) {
    throw DimensionError("log_gt: filterbank has " + std::to_string(fb.weights.cols) + " bins, spectrogram has " +
                         std::to_string(spec.n_bins));
  }
  const std::size_t n_bands = fb.weights.rows;
  Matrix out(n_bands, spec.n_frames);
  std::vector<double> acc(spec.n_frames);
  for (std::size_t b = 0; b < n_bands; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < spec.n_bins; ++k) {
      const double w = fb.weights(b, k);
      if (w == 0.0) continue;
      const float* row = spec.values.data() + k * spec.n_frames;
      for (std::size_t t = 0; t < spec.n_frames; ++t) acc[t] += w * static_cast<double>(row[t]);
    }
    for (std::size_t t = 0; t < spec.n_frames; ++t) out(b, t) = static_cast<float>(std::log10(acc[t] + kLogFloor));
  }
  return out;
}

Matrix delta(const Matrix& log_spec) {
  constexpr std::size_t kHalfWindow = 2;
  if (log_spec.cols < 2 * kHalfWindow + 1) {
    throw TooShortError("delta: need at least 5 frames, got " + std::to_string(log_spec.cols));
  }
  const double denom = 2.0 * (1.0 * 1.0 + 2.0 * 2.0);
  const auto last = static_cast<std::int64_t>(log_spec.cols) - 1;
  Matrix out(log_spec.rows, log_spec.cols);
  for (std::size_t r = 0; r < log_spec.rows; ++r) {
    for (std::size_t t = 0; t < log_spec.cols; ++t) {
      double acc = 0.0;
      for (std::size_t n = 1; n <= kHalfWindow; ++n) {
        const auto ti = static_cast<std::int64_t>(t);
        const auto ahead = static_cast<std::size_t>(std::min(ti + static_cast<std::int64_t>(n), last));
        const auto behind = static_cast<std::size_t>(std::max(ti - static_cast<std::int64_t>(n), std::int64_t{0}));
        acc += static_cast<double>(n) * (static_cast<double>(log_spec(r, ahead)) - log_spec(r, behind));
      }
      out(r, t) = static_cast<float>(acc / denom);
    }
  }
  return out;
}

std::vector<LogGTSegment> segment(const Matrix& static_spec, const Matrix& delta_spec, std::size_t frames,
                                  std::size_t hop) {
  if (static_spec.rows != delta_spec.rows || static_spec.cols != delta_spec.cols) {
    throw DimensionError("segment: static and delta spectrograms differ in shape");
  }
  if (static_spec.rows != kBands || frames != kSegmentFrames) {
    throw DimensionError("segment: segments are " + std::to_string(kBands) + " bands x " +
                         std::to_string(kSegmentFrames) + " frames");
  }
  if (hop == 0) throw ContractError("segment: hop must be >= 1");
  const std::size_t n_frames = static_spec.cols;
  const std::size_t count = n_frames >= frames ? (n_frames - frames) / hop + 1 : 1;
  std::vector<LogGTSegment> out(count);
  for (std::size_t s = 0; s < count; ++s) {
    LogGTSegment& seg = out[s];
    seg.segment_index = static_cast<std::uint32_t>(s);
    const std::size_t start = s * hop;
    const std::size_t available = std::min(frames, n_frames - start);
    for (std::size_t b = 0; b < kBands; ++b) {
      for (std::size_t t = 0; t < available; ++t) {
        seg.at(b, t, 0) = static_spec(b, start + t);
        seg.at(b, t, 1) = delta_spec(b, start + t);
      }
    }
  }
  return out;
}

std::vector<LogGTSegment> extract_segments(const WaveClip& clip, const GammatoneFilterbank& fb,
                                           std::uint8_t augmentation) {
  if (clip.sample_rate != kSampleRate) {
    throw ContractError("extract_segments: clip '" + clip.clip_id + "' is not at 44100 Hz");
  }
  const Matrix stat = log_gt(stft_power(clip), fb);
  const Matrix del = delta(stat);
  auto segments = segment(stat, del);
  for (auto& s : segments) {
    s.clip_id = clip.clip_id;
    s.label = clip.label;
    s.fold = clip.fold;
    s.augmentation = augmentation;
  }
  return segments;
}

NormStats compute_norm_stats(std::span<const LogGTSegment* const> training_segments) {
  if (training_segments.empty()) throw ContractError("compute_norm_stats: no training segments");
  std::array<double, kChannels> sum{}, sum_sq{};
  std::array<double, kChannels> mean{};
  const double count = static_cast<double>(training_segments.size() * kBands * kSegmentFrames);
  for (const LogGTSegment* s : training_segments) {
    for (std::size_t i = 0; i < kSegmentValues; ++i) sum[i % kChannels] += s->values[i];
  }
  for (std::size_t c = 0; c < kChannels; ++c) mean[c] = sum[c] / count;
  for (const LogGTSegment* s : training_segments) {
    for (std::size_t i = 0; i < kSegmentValues; ++i) {
      const double d = s->values[i] - mean[i % kChannels];
      sum_sq[i % kChannels] += d * d;
    }
  }
  NormStats stats;
  for (std::size_t c = 0; c < kChannels; ++c) {
    const double sd = std::sqrt(sum_sq[c] / count);
    if (!(sd > 0.0)) {
      throw ContractError("compute_norm_stats: channel " + std::to_string(c) +
                          " has zero variance (degenerate training set)");
    }
    stats.mean[c] = static_cast<float>(mean[c]);
    stats.std[c] = static_cast<float>(sd);
  }
  return stats;
}

void apply_norm(LogGTSegment& segment, const NormStats& stats) {
  for (std::size_t i = 0; i < kSegmentValues; ++i) {
    const std::size_t c = i % kChannels;
    segment.values[i] = (segment.values[i] - stats.mean[c]) / stats.std[c];
  }
}

}  // namespace acrnn::dsp
