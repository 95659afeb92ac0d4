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

#include "acrnn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "acrnn/errors.hpp"
#include "acrnn/fft.hpp"

namespace acrnn::augment {

namespace {

constexpr std::size_t kVocoderFft = 1024;
constexpr std::size_t kVocoderHop = 256;
constexpr std::size_t kVocoderBins = kVocoderFft / 2 + 1;
constexpr double kMaxSemitones = 12.0;

using dsp::RealFft;
using Spectrum = std::vector<std::complex<double>>;  // frame-major, kVocoderBins per frame

std::vector<double> hann_window() {
  std::vector<double> w(kVocoderFft);
  for (std::size_t n = 0; n < kVocoderFft; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / kVocoderFft);
  }
  return w;
}

// Centered STFT: the signal is zero-padded by half a window on each side.
Spectrum stft(std::span<const float> x, const std::vector<double>& window, RealFft& fft, std::size_t& n_frames) {
  const std::size_t pad = kVocoderFft / 2;
  n_frames = 1 + x.size() / kVocoderHop;
  Spectrum out(n_frames * kVocoderBins);
  std::vector<double> frame(kVocoderFft);
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t n = 0; n < kVocoderFft; ++n) {
      const std::int64_t idx = static_cast<std::int64_t>(f * kVocoderHop + n) - static_cast<std::int64_t>(pad);
      const double v = idx >= 0 && idx < static_cast<std::int64_t>(x.size()) ? x[static_cast<std::size_t>(idx)] : 0.0;
      frame[n] = v * window[n];
    }
    fft.forward(frame, std::span(out).subspan(f * kVocoderBins, kVocoderBins));
  }
  return out;
}

std::vector<float> istft(const Spectrum& spec, std::size_t n_frames, const std::vector<double>& window, RealFft& fft,
                         std::size_t length) {
  const std::size_t pad = kVocoderFft / 2;
  const std::size_t total = kVocoderFft + kVocoderHop * (n_frames - 1);
  std::vector<double> acc(total, 0.0), norm(total, 0.0), frame(kVocoderFft);
  for (std::size_t f = 0; f < n_frames; ++f) {
    fft.inverse(std::span(spec).subspan(f * kVocoderBins, kVocoderBins), frame);
    for (std::size_t n = 0; n < kVocoderFft; ++n) {
      acc[f * kVocoderHop + n] += frame[n] / kVocoderFft * window[n];
      norm[f * kVocoderHop + n] += window[n] * window[n];
    }
  }
  std::vector<float> out(length, 0.0f);
  for (std::size_t i = 0; i < length && i + pad < total; ++i) {
    const double w = norm[i + pad];
    out[i] = static_cast<float>(w > 1e-8 ? acc[i + pad] / w : acc[i + pad]);
  }
  return out;
}

double wrap_phase(double p) { return p - 2.0 * std::numbers::pi * std::round(p / (2.0 * std::numbers::pi)); }

}  // namespace

void AugmentConfig::validate() const {
  if (!(stretch_min > 0.0) || stretch_max < stretch_min) throw ContractError("augment: invalid stretch range");
  if (shift_max < shift_min || std::abs(shift_min) > kMaxSemitones || std::abs(shift_max) > kMaxSemitones) {
    throw ContractError("augment: invalid pitch-shift range");
  }
  if (!(mixup_alpha > 0.0)) throw ContractError("augment: mixup alpha must be > 0");
}

std::vector<float> time_stretch(std::span<const float> samples, double rate) {
  if (!(rate > 0.0)) throw ContractError("time_stretch: rate must be > 0, got " + std::to_string(rate));
  const auto length = static_cast<std::size_t>(std::llround(static_cast<double>(samples.size()) / rate));
  if (samples.empty()) return {};

  const auto window = hann_window();
  RealFft fft(kVocoderFft);
  std::size_t n_frames = 0;
  const Spectrum in = stft(samples, window, fft, n_frames);

  std::vector<double> steps;
  for (double t = 0.0; t < static_cast<double>(n_frames); t += rate) steps.push_back(t);

  std::vector<double> advance(kVocoderBins), phase(kVocoderBins);
  for (std::size_t k = 0; k < kVocoderBins; ++k) {
    advance[k] = 2.0 * std::numbers::pi * static_cast<double>(k) * kVocoderHop / kVocoderFft;
    phase[k] = std::arg(in[k]);
  }
  auto column = [&](std::size_t f, std::size_t k) {
    return f < n_frames ? in[f * kVocoderBins + k] : std::complex<double>{};
  };

  Spectrum out(steps.size() * kVocoderBins);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto f = static_cast<std::size_t>(steps[t]);
    const double alpha = steps[t] - static_cast<double>(f);
    for (std::size_t k = 0; k < kVocoderBins; ++k) {
      const auto c0 = column(f, k), c1 = column(f + 1, k);
      const double mag = (1.0 - alpha) * std::abs(c0) + alpha * std::abs(c1);
      out[t * kVocoderBins + k] = std::polar(mag, phase[k]);
      const double dphase = wrap_phase(std::arg(c1) - std::arg(c0) - advance[k]);
      phase[k] += advance[k] + dphase;
    }
  }
  return istft(out, steps.size(), window, fft, length);
}

dsp::WaveClip time_stretch(const dsp::WaveClip& clip, double rate) {
  dsp::WaveClip out = clip;
  out.samples = time_stretch(std::span<const float>(clip.samples), rate);
  return out;
}

std::vector<float> resample_linear(std::span<const float> samples, std::size_t length) {
  std::vector<float> out(length, 0.0f);
  if (samples.empty() || length == 0) return out;
  if (samples.size() == 1 || length == 1) {
    std::fill(out.begin(), out.end(), samples[0]);
    return out;
  }
  const double scale = static_cast<double>(samples.size()) / static_cast<double>(length);
  for (std::size_t i = 0; i < length; ++i) {
    const double pos = static_cast<double>(i) * scale;
    const auto j = std::min(static_cast<std::size_t>(pos), samples.size() - 1);
    const double frac = pos - static_cast<double>(j);
    const double next = j + 1 < samples.size() ? samples[j + 1] : samples[j];
    out[i] = static_cast<float>((1.0 - frac) * samples[j] + frac * next);
  }
  return out;
}

std::vector<float> pitch_shift(std::span<const float> samples, double semitones) {
  if (!std::isfinite(semitones) || std::abs(semitones) > kMaxSemitones) {
    throw ContractError("pitch_shift: semitones out of range: " + std::to_string(semitones));
  }
  const double rate = std::pow(2.0, -semitones / 12.0);
  return resample_linear(time_stretch(samples, rate), samples.size());
}

dsp::WaveClip pitch_shift(const dsp::WaveClip& clip, double semitones) {
  dsp::WaveClip out = clip;
  out.samples = pitch_shift(std::span<const float>(clip.samples), semitones);
  return out;
}

dsp::WaveClip augmented_copy(const dsp::WaveClip& clip, const AugmentConfig& config, std::size_t k) {
  if (k == 0) throw ContractError("augmented_copy: copy index is 1-based");
  config.validate();
  Rng rng(derive_seed(config.rng_seed, hash_string(clip.clip_id) ^ mix_seed(k)));
  if (k % 2 == 1) {
    std::uniform_real_distribution<double> d(config.stretch_min, config.stretch_max);
    return time_stretch(clip, d(rng));
  }
  std::uniform_real_distribution<double> d(config.shift_min, config.shift_max);
  return pitch_shift(clip, d(rng));
}

void mix(std::span<const float> xi, std::span<const float> xj, float lambda, std::span<float> out) {
  if (xi.size() != xj.size() || out.size() != xi.size()) {
    throw DimensionError("mixup: operand sizes " + std::to_string(xi.size()) + " and " + std::to_string(xj.size()));
  }
  if (!(lambda >= 0.0f && lambda <= 1.0f)) throw ContractError("mixup: lambda outside [0, 1]");
  const float mu = 1.0f - lambda;
  for (std::size_t n = 0; n < xi.size(); ++n) {
    // Exact endpoints: lambda = 1 or 0 reproduces one operand bit for bit.
    out[n] = lambda == 1.0f ? xi[n] : lambda == 0.0f ? xj[n] : lambda * xi[n] + mu * xj[n];
  }
}

std::pair<dsp::LogGTSegment, std::vector<float>> mixup(const dsp::LogGTSegment& xi, const std::vector<float>& yi,
                                                       const dsp::LogGTSegment& xj, const std::vector<float>& yj,
                                                       float lambda) {
  std::pair<dsp::LogGTSegment, std::vector<float>> out{lambda >= 0.5f ? xi : xj, std::vector<float>(yi.size())};
  mix(xi.values, xj.values, lambda, out.first.values);
  mix(yi, yj, lambda, out.second);
  return out;
}

double sample_lambda(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw ContractError("sample_lambda: alpha must be > 0");
  std::gamma_distribution<double> g(alpha, 1.0);
  const double a = g(rng);
  const double b = g(rng);
  if (a + b == 0.0) return 0.5;
  return a / (a + b);
}

std::vector<float> one_hot(std::size_t index, std::size_t classes) {
  if (index >= classes) throw ContractError("one_hot: index out of range");
  std::vector<float> v(classes, 0.0f);
  v[index] = 1.0f;
  return v;
}

}  // namespace acrnn::augment
