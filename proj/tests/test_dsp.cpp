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
#include <numeric>
#include <random>
#include <vector>

#include "acrnn/dsp.hpp"
#include "acrnn/errors.hpp"
#include "acrnn/fft.hpp"
#include "doctest.h"

using namespace acrnn;
using namespace acrnn::dsp;

namespace {

std::vector<float> sine(double hz, std::size_t n, double amplitude = 1.0) {
  std::vector<float> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / kSampleRate));
  }
  return s;
}

// Direct O(N^2) DFT power of one Hamming-windowed frame.
std::vector<double> direct_dft_power(const float* frame) {
  std::vector<double> p(kBins);
  for (std::size_t k = 0; k < kBins; ++k) {
    std::complex<double> acc{};
    for (std::size_t n = 0; n < kFftSize; ++n) {
      const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / kFftSize);
      acc += static_cast<double>(frame[n]) * w * std::polar(1.0, -2.0 * std::numbers::pi * k * n / kFftSize);
    }
    p[k] = std::norm(acc);
  }
  return p;
}

Matrix ramp_matrix(std::size_t rows, std::size_t cols, double slope) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < cols; ++t) m(r, t) = static_cast<float>(slope * t + r);
  return m;
}

}  // namespace

TEST_CASE("RealFft forward and inverse round trip") {
  RealFft fft(16);
  std::vector<double> x(16), y(16);
  std::iota(x.begin(), x.end(), 1.0);
  std::vector<std::complex<double>> X(fft.bins());
  fft.forward(x, X);
  CHECK(X[0].real() == doctest::Approx(136.0));
  fft.inverse(X, y);
  for (std::size_t i = 0; i < 16; ++i) CHECK(y[i] / 16.0 == doctest::Approx(x[i]));
}

TEST_CASE("stft frame count for a 5 s clip") {
  CHECK(stft_frame_count(220500) == 429);
  CHECK(stft_frame_count(1024) == 1);
  CHECK(stft_frame_count(1535) == 1);
  CHECK(stft_frame_count(1536) == 2);
  CHECK(stft_frame_count(1023) == 0);
  const auto spec = stft_power(std::vector<float>(220500, 0.0f));
  CHECK(spec.n_frames == 429);
  CHECK(spec.n_bins == 513);
}

TEST_CASE("stft of silence is zero and short clips are rejected") {
  const auto spec = stft_power(std::vector<float>(4096, 0.0f));
  CHECK(std::all_of(spec.values.begin(), spec.values.end(), [](float v) { return v == 0.0f; }));
  CHECK_THROWS_AS(stft_power(std::vector<float>(1023, 0.1f)), TooShortError);
}

TEST_CASE("440 Hz sine peaks at bin 10 and matches a direct DFT") {
  const auto s = sine(440.0, 44100);
  const auto spec = stft_power(s);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kBins; ++k)
      if (spec.at(k, f) > spec.at(best, f)) best = k;
    CHECK(best == 10);
  }
  for (std::size_t f : {0u, 7u, 40u}) {
    const auto oracle = direct_dft_power(s.data() + f * kHop);
    const double peak = *std::max_element(oracle.begin(), oracle.end());
    for (std::size_t k = 0; k < kBins; ++k) CHECK(std::abs(spec.at(k, f) - oracle[k]) <= 1e-5 * peak);
  }
}

TEST_CASE("windowed sine power is concentrated within two bins") {
  for (double hz : {440.0, 1000.0, 5512.5, 12345.0}) {
    const auto spec = stft_power(sine(hz, 22050, 0.5));
    const auto centre = static_cast<long>(std::lround(hz * kFftSize / kSampleRate));
    for (std::size_t f = 0; f < spec.n_frames; ++f) {
      double total = 0.0, near = 0.0;
      for (std::size_t k = 0; k < kBins; ++k) {
        total += spec.at(k, f);
        if (std::abs(static_cast<long>(k) - centre) <= 2) near += spec.at(k, f);
      }
      CHECK(near >= 0.9 * total);
    }
  }
}

TEST_CASE("gammatone filterbank geometry") {
  const auto fb = build_gammatone_filterbank();
  REQUIRE(fb.weights.rows == 128);
  REQUIRE(fb.weights.cols == 513);
  REQUIRE(fb.center_frequencies.size() == 128);
  CHECK(fb.center_frequencies.front() == doctest::Approx(20.0));
  for (std::size_t b = 0; b < 128; ++b) {
    const double c = fb.center_frequencies[b];
    CHECK(c > 0.0);
    CHECK(c < 22050.0);
    if (b > 0) CHECK(c > fb.center_frequencies[b - 1]);
    double sum = 0.0, peak = 0.0;
    std::size_t argmax = 0;
    for (std::size_t k = 0; k < 513; ++k) {
      const float w = fb.weights(b, k);
      CHECK(w >= 0.0f);
      sum += w;
      if (w > peak) {
        peak = w;
        argmax = k;
      }
    }
    CHECK(sum > 0.0);
    CHECK(peak == doctest::Approx(1.0));
    const auto expected = std::lround(c * 1024.0 / 44100.0);
    CHECK(std::abs(static_cast<long>(argmax) - expected) <= 1);
  }
  CHECK_THROWS_AS(build_gammatone_filterbank(0), ContractError);
}

TEST_CASE("erb rate conversions are inverse") {
  for (double hz : {20.0, 100.0, 1000.0, 22050.0}) CHECK(erb_rate_to_hz(hz_to_erb_rate(hz)) == doctest::Approx(hz));
}

TEST_CASE("log_gt floor, scaling and shape") {
  const auto fb = build_gammatone_filterbank();
  PowerSpectrogram zero;
  zero.n_frames = 3;
  zero.values.assign(kBins * 3, 0.0f);
  const auto floor = log_gt(zero, fb);
  for (float v : floor.values) CHECK(v == doctest::Approx(-10.0));

  const auto spec = stft_power(sine(1000.0, 220500, 0.3));
  auto louder = spec;
  for (auto& v : louder.values) v *= 10.0f;
  const auto a = log_gt(spec, fb);
  const auto b = log_gt(louder, fb);
  CHECK(a.rows == 128);
  CHECK(a.cols == 429);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] > -4.0f) CHECK(b.values[i] - a.values[i] == doctest::Approx(1.0).epsilon(1e-4));
  }

  PowerSpectrogram wrong;
  wrong.n_bins = 257;
  wrong.n_frames = 1;
  wrong.values.assign(257, 1.0f);
  CHECK_THROWS_AS(log_gt(wrong, fb), DimensionError);
}

TEST_CASE("delta of constant and ramp inputs") {
  Matrix c(4, 9, 3.5f);
  const auto dc = delta(c);
  for (float v : dc.values) CHECK(v == 0.0f);

  const double s = 0.75;
  const auto dr = delta(ramp_matrix(4, 12, s));
  CHECK(dr.rows == 4);
  CHECK(dr.cols == 12);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t t = 2; t + 2 < 12; ++t) CHECK(dr(r, t) == doctest::Approx(s));
  // Replicated edges: at t=0 the window is {x0, x0, x0, x1, x2}.
  CHECK(dr(0, 0) == doctest::Approx(s * (1.0 + 2.0 * 2.0) / 10.0));

  CHECK_THROWS_AS(delta(Matrix(2, 4)), TooShortError);
  CHECK_NOTHROW(delta(Matrix(2, 5)));
}

TEST_CASE("segment counts and zero padding") {
  auto count = [](std::size_t frames) {
    const Matrix m(128, frames, 1.0f);
    return segment(m, m).size();
  };
  CHECK(count(429) == 5);
  CHECK(count(128) == 1);
  CHECK(count(191) == 1);
  CHECK(count(192) == 2);

  const Matrix st(128, 100, 2.0f), de(128, 100, -1.0f);
  const auto segs = segment(st, de);
  REQUIRE(segs.size() == 1);
  REQUIRE(segs[0].values.size() == kSegmentValues);
  for (std::size_t b = 0; b < 128; ++b)
    for (std::size_t t = 0; t < 128; ++t) {
      CHECK(segs[0].at(b, t, 0) == (t < 100 ? 2.0f : 0.0f));
      CHECK(segs[0].at(b, t, 1) == (t < 100 ? -1.0f : 0.0f));
    }
  CHECK_THROWS_AS(segment(Matrix(128, 200), Matrix(128, 199)), DimensionError);
}

TEST_CASE("segments stack static then delta and follow the hop") {
  const auto st = ramp_matrix(128, 300, 0.5);
  const auto de = delta(st);
  const auto segs = segment(st, de);
  REQUIRE(segs.size() == 3);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(segs[i].segment_index == i);
    for (std::size_t t = 2; t < 126; ++t) {
      CHECK(segs[i].at(5, t, 0) == st(5, i * 64 + t));
      CHECK(segs[i].at(5, t, 1) == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("extract_segments tags and determinism") {
  const auto fb = build_gammatone_filterbank();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> d(-0.5f, 0.5f);
  WaveClip clip;
  clip.samples.resize(220500);
  for (auto& x : clip.samples) x = d(rng);
  clip.label = 3;
  clip.fold = 2;
  clip.clip_id = "1-100038-A-14";
  const auto a = extract_segments(clip, fb);
  const auto b = extract_segments(clip, fb, 2);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].values == b[i].values);
    CHECK(a[i].clip_id == clip.clip_id);
    CHECK(a[i].label == 3);
    CHECK(a[i].fold == 2);
    CHECK_FALSE(a[i].augmented());
    CHECK(b[i].augmented());
  }
  clip.sample_rate = 22050;
  CHECK_THROWS_AS(extract_segments(clip, fb), ContractError);
}

TEST_CASE("normalization statistics") {
  std::mt19937_64 rng(8);
  std::normal_distribution<float> d0(-3.0f, 2.0f), d1(0.5f, 0.1f);
  std::vector<LogGTSegment> segs(3);
  for (auto& s : segs)
    for (std::size_t i = 0; i < kSegmentValues; ++i) s.values[i] = i % 2 == 0 ? d0(rng) : d1(rng);
  std::vector<const LogGTSegment*> ptrs;
  for (const auto& s : segs) ptrs.push_back(&s);
  const auto stats = compute_norm_stats(ptrs);
  CHECK(stats.mean[0] == doctest::Approx(-3.0).epsilon(0.01));
  CHECK(stats.std[1] == doctest::Approx(0.1).epsilon(0.02));

  for (auto& s : segs) apply_norm(s, stats);
  const auto after = compute_norm_stats(ptrs);
  for (std::size_t c = 0; c < kChannels; ++c) {
    CHECK(std::abs(after.mean[c]) < 1e-3);
    CHECK(std::abs(after.std[c] - 1.0f) < 1e-3);
  }

  LogGTSegment copy = segs[0];
  apply_norm(copy, NormStats{});
  CHECK(copy.values == segs[0].values);

  LogGTSegment flat;
  for (std::size_t i = 0; i < kSegmentValues; i += 2) flat.values[i] = static_cast<float>(i % 7);
  const LogGTSegment* one[] = {&flat};
  CHECK_THROWS_AS(compute_norm_stats(one), ContractError);
  CHECK_THROWS_AS(compute_norm_stats({}), ContractError);
}
