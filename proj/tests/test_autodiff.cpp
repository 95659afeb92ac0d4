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

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "acrnn/ops.hpp"
#include "doctest.h"
#include "support/fd_oracle.hpp"

using namespace acrnn;
using namespace acrnn::ad;
using acrnn::testing::away_from_zero;
using acrnn::testing::DTensor;
using acrnn::testing::finite_difference_check;
using acrnn::testing::random_tensor;
using FTensor = Tensor<float>;

namespace {

std::vector<float> iota_vec(std::size_t n, float start = 1.0f) {
  std::vector<float> v(n);
  std::iota(v.begin(), v.end(), start);
  return v;
}

// Scalar loss <out, projection> so every output element contributes.
DTensor project(const DTensor& out, const DTensor& projection) { return sum(mul(out, projection)); }

constexpr double kOpTolerance = 1e-4;

}  // namespace

TEST_SUITE("conv2d") {
  TEST_CASE("identity kernel on a 1x1 input") {
    auto x = FTensor::from({1, 1, 1}, {5.0f});
    auto k = FTensor::from({1, 1, 1, 1}, {1.0f});
    auto b = FTensor::from({1}, {0.0f});
    auto y = conv2d(x, k, b, {1, 1}, Padding::Same);
    CHECK(y.shape() == Shape{1, 1, 1});
    CHECK(y[0] == 5.0f);
  }

  TEST_CASE("zero input gives zero output") {
    std::mt19937_64 rng(1);
    auto x = FTensor::zeros({4, 4, 1});
    auto k = random_tensor<float>({3, 3, 1, 2}, rng);
    auto y = conv2d(x, k, FTensor::zeros({2}), {1, 1}, Padding::Same);
    for (float v : y.data()) CHECK(v == 0.0f);
  }

  TEST_CASE("valid 2x2 all-ones kernel over 1..9") {
    auto x = FTensor::from({3, 3, 1}, iota_vec(9));
    auto k = FTensor::full({2, 2, 1, 1}, 1.0f);
    auto y = conv2d(x, k, FTensor::zeros({1}), {1, 1}, Padding::Valid);
    CHECK(y.shape() == Shape{2, 2, 1});
    CHECK(y.to_vector() == std::vector<float>{12, 16, 24, 28});
  }

  TEST_CASE("same padding preserves spatial dims; stride rounds up") {
    auto x = FTensor::zeros({2, 7, 9, 3});
    auto k = FTensor::zeros({3, 5, 3, 4});
    CHECK(conv2d(x, k, FTensor(), {1, 1}, Padding::Same).shape() == Shape{2, 7, 9, 4});
    CHECK(conv2d(x, k, FTensor(), {2, 2}, Padding::Same).shape() == Shape{2, 4, 5, 4});
    CHECK(conv2d(x, k, FTensor(), {1, 1}, Padding::Valid).shape() == Shape{2, 5, 5, 4});
  }

  TEST_CASE("channel mismatch is a dimension error") {
    auto x = FTensor::zeros({4, 4, 2});
    auto k = FTensor::zeros({3, 3, 3, 1});
    CHECK_THROWS_AS(conv2d(x, k, FTensor(), {1, 1}, Padding::Same), DimensionError);
    CHECK_THROWS_AS(conv2d(x, FTensor::zeros({5, 5, 2, 1}), FTensor(), {1, 1}, Padding::Valid), DimensionError);
    CHECK_THROWS_AS(conv2d(x, FTensor::zeros({1, 1, 2, 1}), FTensor(), {0, 1}, Padding::Valid), ContractError);
  }

  TEST_CASE("linear in the input when bias is zero") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      auto x = random_tensor<float>({2, 6, 7, 3}, rng, -1, 1, false);
      auto k = random_tensor<float>({3, 5, 3, 4}, rng, -1, 1, false);
      const float a = 0.5f + static_cast<float>(trial);
      auto y1 = conv2d(scale(x, a), k, FTensor(), {1, 1}, Padding::Same);
      auto y2 = scale(conv2d(x, k, FTensor(), {1, 1}, Padding::Same), a);
      for (std::size_t i = 0; i < y1.numel(); ++i) {
        CHECK(std::abs(y1[i] - y2[i]) <= 1e-5f * std::max(1.0f, std::abs(y2[i])));
      }
    }
  }

  TEST_CASE("gradients match finite differences") {
    std::mt19937_64 rng(3);
    for (auto [stride, pad] : {std::pair{std::pair<std::size_t, std::size_t>{1, 1}, Padding::Same},
                               std::pair{std::pair<std::size_t, std::size_t>{2, 1}, Padding::Same},
                               std::pair{std::pair<std::size_t, std::size_t>{1, 2}, Padding::Valid}}) {
      auto x = random_tensor({2, 5, 6, 2}, rng);
      auto k = random_tensor({3, 2, 2, 3}, rng);
      auto b = random_tensor({3}, rng);
      auto probe = conv2d(x, k, b, stride, pad);
      auto r = random_tensor(probe.shape(), rng, -1, 1, false);
      auto rep = finite_difference_check([&] { return project(conv2d(x, k, b, stride, pad), r); }, {x, k, b});
      CHECK(rep.max_rel_error <= kOpTolerance);
    }
  }
}

TEST_SUITE("maxpool2d") {
  TEST_CASE("2x2 blocks over 1..16") {
    auto x = FTensor::from({4, 4, 1}, iota_vec(16));
    auto y = maxpool2d(x, 2, 2);
    CHECK(y.shape() == Shape{2, 2, 1});
    CHECK(y.to_vector() == std::vector<float>{6, 8, 14, 16});
  }

  TEST_CASE("constant input stays constant; floor shapes") {
    auto y = maxpool2d(FTensor::full({128, 128, 2}, 3.0f), 4, 3);
    CHECK(y.shape() == Shape{32, 42, 2});
    for (float v : y.data()) CHECK(v == 3.0f);
  }

  TEST_CASE("window larger than input is a dimension error") {
    CHECK_THROWS_AS(maxpool2d(FTensor::zeros({3, 8, 1}), 4, 1), DimensionError);
  }

  TEST_CASE("matches brute-force window maxima on random inputs") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t h = 4 + rng() % 8, w = 3 + rng() % 8, c = 1 + rng() % 3;
      const std::size_t wh = 1 + rng() % 4, ww = 1 + rng() % 3;
      auto x = random_tensor<float>({h, w, c}, rng, -1, 1, false);
      auto y = maxpool2d(x, wh, ww);
      for (std::size_t oh = 0; oh < h / wh; ++oh)
        for (std::size_t ow = 0; ow < w / ww; ++ow)
          for (std::size_t ch = 0; ch < c; ++ch) {
            float best = -1e30f;
            for (std::size_t i = oh * wh; i < (oh + 1) * wh; ++i)
              for (std::size_t j = ow * ww; j < (ow + 1) * ww; ++j) best = std::max(best, x[(i * w + j) * c + ch]);
            CHECK(y[(oh * (w / ww) + ow) * c + ch] == best);
          }
    }
  }

  TEST_CASE("gradient routes to the argmax only") {
    std::mt19937_64 rng(5);
    auto x = random_tensor({2, 6, 7, 2}, rng);
    auto r = random_tensor({2, 3, 2, 2}, rng, -1, 1, false);
    auto rep = finite_difference_check([&] { return project(maxpool2d(x, 2, 3), r); }, {x});
    CHECK(rep.max_rel_error <= kOpTolerance);
  }
}

TEST_SUITE("avgpool_freq") {
  TEST_CASE("F = 1 is the identity") {
    auto x = FTensor::from({1, 3, 2}, iota_vec(6));
    CHECK(avgpool_freq(x).to_vector() == x.to_vector());
  }
  TEST_CASE("column mean") {
    auto x = FTensor::from({3, 1, 1}, {2, 4, 6});
    CHECK(avgpool_freq(x).item() == doctest::Approx(4.0));
    auto c = avgpool_freq(FTensor::full({2, 5, 4, 3}, 1.5f));
    CHECK(c.shape() == Shape{2, 1, 4, 3});
    for (float v : c.data()) CHECK(v == doctest::Approx(1.5));
  }
  TEST_CASE("gradient") {
    std::mt19937_64 rng(6);
    auto x = random_tensor({2, 4, 5, 3}, rng);
    auto r = random_tensor({2, 1, 5, 3}, rng, -1, 1, false);
    CHECK(finite_difference_check([&] { return project(avgpool_freq(x), r); }, {x}).max_rel_error <= kOpTolerance);
  }
}

TEST_SUITE("dense") {
  TEST_CASE("identity weight") {
    auto x = FTensor::from({2, 2}, {1, 2, 3, 4});
    auto w = FTensor::from({2, 2}, {1, 0, 0, 1});
    CHECK(dense(x, w, FTensor::zeros({2})).to_vector() == x.to_vector());
  }
  TEST_CASE("hand dot product") {
    auto y = dense(FTensor::from({1, 2}, {1, 2}), FTensor::from({2, 1}, {1, 1}), FTensor::from({1}, {0.5f}));
    CHECK(y.item() == doctest::Approx(3.5));
  }
  TEST_CASE("zero input yields the bias") {
    auto y = dense(FTensor::zeros({3, 4}), FTensor::full({4, 2}, 7.0f), FTensor::from({2}, {1.0f, -2.0f}));
    CHECK(y.to_vector() == std::vector<float>{1, -2, 1, -2, 1, -2});
  }
  TEST_CASE("mismatch") { CHECK_THROWS_AS(dense(FTensor::zeros({1, 3}), FTensor::zeros({2, 2}), FTensor()), DimensionError); }
  TEST_CASE("linearity and gradient") {
    std::mt19937_64 rng(7);
    auto x = random_tensor({3, 5}, rng);
    auto w = random_tensor({5, 4}, rng);
    auto b = random_tensor({4}, rng);
    auto y1 = dense(scale(x, 2.5), w, DTensor());
    auto y2 = scale(dense(x, w, DTensor()), 2.5);
    for (std::size_t i = 0; i < y1.numel(); ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));
    auto r = random_tensor({3, 4}, rng, -1, 1, false);
    CHECK(finite_difference_check([&] { return project(dense(x, w, b), r); }, {x, w, b}).max_rel_error <=
          kOpTolerance);
  }
}

TEST_SUITE("softmax") {
  TEST_CASE("uniform logits") {
    auto y = softmax(FTensor::from({3}, {0, 0, 0}));
    for (float v : y.data()) CHECK(v == doctest::Approx(1.0 / 3.0));
  }
  TEST_CASE("direct evaluation of [1,2,3]") {
    auto y = softmax(DTensor::from({3}, {1, 2, 3}));
    CHECK(y[0] == doctest::Approx(0.09003).epsilon(1e-4));
    CHECK(y[1] == doctest::Approx(0.24473).epsilon(1e-4));
    CHECK(y[2] == doctest::Approx(0.66524).epsilon(1e-4));
  }
  TEST_CASE("shift invariance and normalization on random slices") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      auto x = random_tensor<float>({4, 7}, rng, -20, 20, false);
      auto y = softmax(x);
      std::vector<float> shifted = x.to_vector();
      for (auto& v : shifted) v += 37.0f;
      auto y2 = softmax(FTensor::from({4, 7}, shifted));
      for (std::size_t r = 0; r < 4; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < 7; ++j) {
          CHECK(y[r * 7 + j] > 0.0f);
          CHECK(y[r * 7 + j] == doctest::Approx(y2[r * 7 + j]).epsilon(1e-5));
          s += y[r * 7 + j];
        }
        CHECK(std::abs(s - 1.0) <= 1e-6);
      }
    }
  }
  TEST_CASE("gradient") {
    std::mt19937_64 rng(9);
    auto x = random_tensor({3, 5}, rng, -2, 2);
    auto r = random_tensor({3, 5}, rng, -1, 1, false);
    CHECK(finite_difference_check([&] { return project(softmax(x), r); }, {x}).max_rel_error <= kOpTolerance);
  }
}

TEST_SUITE("gru_bidirectional") {
  GruParams<float> zero_params(std::size_t d, std::size_t h) {
    return {FTensor::zeros({d, 3 * h}), FTensor::zeros({h, 3 * h}), FTensor::zeros({3 * h})};
  }

  TEST_CASE("all-zero parameters give all-zero outputs") {
    std::mt19937_64 rng(10);
    auto x = random_tensor<float>({2, 5, 3}, rng, -1, 1, false);
    auto y = gru_bidirectional(x, zero_params(3, 4), zero_params(3, 4));
    CHECK(y.shape() == Shape{2, 5, 8});
    for (float v : y.data()) CHECK(v == 0.0f);
  }

  TEST_CASE("single step: both halves agree under identical parameters") {
    std::mt19937_64 rng(11);
    GruParams<float> p{random_tensor<float>({3, 12}, rng, -1, 1, false), random_tensor<float>({4, 12}, rng, -1, 1, false),
                       random_tensor<float>({12}, rng, -1, 1, false)};
    auto y = gru_bidirectional(random_tensor<float>({1, 3}, rng, -1, 1, false), p, p);
    CHECK(y.shape() == Shape{1, 8});
    for (std::size_t j = 0; j < 4; ++j) CHECK(y[j] == y[4 + j]);
  }

  TEST_CASE("matches a hand-rolled scalar recurrence") {
    // D = 1, H = 1, forward direction only checked; gate order z, r, n.
    const double wz = 0.3, wr = -0.2, wn = 0.7, uz = 0.5, ur = 0.1, un = -0.4, bz = 0.05, br = -0.1, bn = 0.2;
    GruParams<double> p{DTensor::from({1, 3}, {wz, wr, wn}), DTensor::from({1, 3}, {uz, ur, un}),
                        DTensor::from({3}, {bz, br, bn})};
    const std::vector<double> xs{0.9, -0.3, 0.4};
    auto y = gru_bidirectional(DTensor::from({3, 1}, xs), p, p);
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    double h = 0.0;
    for (std::size_t t = 0; t < 3; ++t) {
      const double z = sig(wz * xs[t] + uz * h + bz);
      const double r = sig(wr * xs[t] + ur * h + br);
      const double n = std::tanh(wn * xs[t] + un * (r * h) + bn);
      h = (1 - z) * n + z * h;
      CHECK(y[t * 2] == doctest::Approx(h).epsilon(1e-12));
    }
  }

  TEST_CASE("shape errors") {
    auto x = FTensor::zeros({2, 5, 3});
    CHECK_THROWS_AS(gru_bidirectional(x, zero_params(4, 4), zero_params(4, 4)), DimensionError);
    CHECK_THROWS_AS(gru_bidirectional(x, zero_params(3, 4), zero_params(3, 5)), DimensionError);
  }

  TEST_CASE("gradient through both directions") {
    std::mt19937_64 rng(12);
    auto x = random_tensor({2, 4, 3}, rng);
    GruParams<double> f{random_tensor({3, 15}, rng), random_tensor({5, 15}, rng), random_tensor({15}, rng)};
    GruParams<double> b{random_tensor({3, 15}, rng), random_tensor({5, 15}, rng), random_tensor({15}, rng)};
    auto r = random_tensor({2, 4, 10}, rng, -1, 1, false);
    auto rep = finite_difference_check([&] { return project(gru_bidirectional(x, f, b), r); },
                                       {x, f.input_weights, f.recurrent_weights, f.bias, b.input_weights,
                                        b.recurrent_weights, b.bias});
    CHECK(rep.max_rel_error <= kOpTolerance);
  }
}

TEST_SUITE("batchnorm") {
  TEST_CASE("train mode standardizes each channel") {
    std::mt19937_64 rng(13);
    auto x = random_tensor<double>({4, 5, 6, 3}, rng, -3, 5, false);
    auto state = BatchNormState<double>::create(3);
    auto y = batchnorm(x, state, Mode::Train);
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0, ss = 0;
      const std::size_t m = y.numel() / 3;
      for (std::size_t i = 0; i < m; ++i) s += y[i * 3 + c];
      for (std::size_t i = 0; i < m; ++i) ss += (y[i * 3 + c] - s / m) * (y[i * 3 + c] - s / m);
      CHECK(std::abs(s / m) <= 1e-4);
      CHECK(std::abs(ss / m - 1.0) <= 1e-4);
    }
  }

  TEST_CASE("gamma = 0 yields beta everywhere") {
    std::mt19937_64 rng(14);
    auto state = BatchNormState<float>::create(2);
    std::fill(state.gamma.mutable_data().begin(), state.gamma.mutable_data().end(), 0.0f);
    state.beta.mutable_data()[0] = 0.25f;
    state.beta.mutable_data()[1] = -1.5f;
    auto y = batchnorm(random_tensor<float>({3, 4, 2}, rng, -1, 1, false), state, Mode::Train);
    for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y[i] == (i % 2 == 0 ? 0.25f : -1.5f));
  }

  TEST_CASE("zero-variance channel maps to zeros") {
    auto state = BatchNormState<float>::create(1);
    auto y = batchnorm(FTensor::full({4, 1}, 5.0f), state, Mode::Train);
    for (float v : y.data()) CHECK(v == 0.0f);
  }

  TEST_CASE("infer before any update uses mean 0 / var 1; running stats follow momentum") {
    auto state = BatchNormState<double>::create(1);
    auto y = batchnorm(DTensor::from({2, 1}, {2.0, 4.0}), state, Mode::Infer);
    CHECK(y[0] == doctest::Approx(2.0 / std::sqrt(1.0 + 1e-5)));
    batchnorm(DTensor::from({2, 1}, {2.0, 4.0}), state, Mode::Train);
    CHECK(state.running_mean[0] == doctest::Approx(0.1 * 3.0));
    CHECK(state.running_var[0] == doctest::Approx(0.9 + 0.1 * 1.0));
    CHECK(state.running_var[0] >= 0.0);
  }

  TEST_CASE("channel mismatch") {
    auto state = BatchNormState<float>::create(3);
    CHECK_THROWS_AS(batchnorm(FTensor::zeros({2, 2}), state, Mode::Train), DimensionError);
  }

  TEST_CASE("gradients in both modes") {
    std::mt19937_64 rng(15);
    for (Mode mode : {Mode::Train, Mode::Infer}) {
      auto x = random_tensor({3, 4, 2}, rng);
      auto state = BatchNormState<double>::create(2);
      state.gamma = random_tensor({2}, rng, 0.5, 1.5);
      state.beta = random_tensor({2}, rng);
      state.running_mean = random_tensor({2}, rng, -0.5, 0.5, false);
      state.running_var = random_tensor({2}, rng, 0.5, 2.0, false);
      auto r = random_tensor({3, 4, 2}, rng, -1, 1, false);
      auto frozen = state;  // running stats must not drift between evaluations
      auto rep = finite_difference_check(
          [&] {
            auto s = frozen;
            s.running_mean = frozen.running_mean.detach_copy();
            s.running_var = frozen.running_var.detach_copy();
            return project(batchnorm(x, s, mode), r);
          },
          {x, state.gamma, state.beta});
      CHECK(rep.max_rel_error <= kOpTolerance);
    }
  }
}

TEST_SUITE("activations and dropout") {
  TEST_CASE("relu") {
    auto y = relu(FTensor::from({2}, {-3.0f, 3.0f}));
    CHECK(y[0] == 0.0f);
    CHECK(y[1] == 3.0f);
  }
  TEST_CASE("tanh and sigmoid values") {
    auto t = tanh(DTensor::from({1}, {0.5}));
    auto s = sigmoid(DTensor::from({1}, {0.0}));
    CHECK(t[0] == doctest::Approx(std::tanh(0.5)));
    CHECK(s[0] == doctest::Approx(0.5));
  }
  TEST_CASE("gradients away from the relu kink") {
    std::mt19937_64 rng(16);
    auto x = away_from_zero({4, 5}, rng);
    auto r = random_tensor({4, 5}, rng, -1, 1, false);
    CHECK(finite_difference_check([&] { return project(relu(x), r); }, {x}).max_rel_error <= kOpTolerance);
    CHECK(finite_difference_check([&] { return project(tanh(x), r); }, {x}).max_rel_error <= kOpTolerance);
    CHECK(finite_difference_check([&] { return project(sigmoid(x), r); }, {x}).max_rel_error <= kOpTolerance);
  }
  TEST_CASE("dropout p = 0 and infer mode are identities") {
    Rng rng(1);
    auto x = FTensor::from({3}, {1, 2, 3});
    CHECK(dropout(x, 0.0, Mode::Train, rng).to_vector() == x.to_vector());
    CHECK(dropout(x, 0.0, Mode::Infer, rng).to_vector() == x.to_vector());
    CHECK(dropout(x, 0.7, Mode::Infer, rng).to_vector() == x.to_vector());
    CHECK_THROWS_AS(dropout(x, 1.0, Mode::Train, rng), ContractError);
  }
  TEST_CASE("train-mode expectation is preserved") {
    Rng rng(2);
    auto x = FTensor::full({10000}, 2.0f);
    auto y = dropout(x, 0.5, Mode::Train, rng);
    double mean = 0.0;
    for (float v : y.data()) {
      CHECK((v == 0.0f || v == 4.0f));
      mean += v;
    }
    mean /= 10000.0;
    CHECK(std::abs(mean - 2.0) <= 0.02 * 2.0);
  }
  TEST_CASE("dropout gradient with a fixed mask") {
    std::mt19937_64 rng(17);
    auto x = random_tensor({30}, rng);
    auto r = random_tensor({30}, rng, -1, 1, false);
    auto rep = finite_difference_check(
        [&] {
          Rng mask_rng(99);
          return project(dropout(x, 0.5, Mode::Train, mask_rng), r);
        },
        {x});
    CHECK(rep.max_rel_error <= kOpTolerance);
  }
}

TEST_SUITE("cross_entropy") {
  TEST_CASE("confident correct prediction has zero loss") {
    auto l = cross_entropy(FTensor::from({1, 3}, {0, 1, 0}), FTensor::from({1, 3}, {0, 1, 0}));
    CHECK(l.item() == doctest::Approx(0.0));
  }
  TEST_CASE("uniform over four classes") {
    auto l = cross_entropy(DTensor::from({1, 4}, {0.25, 0.25, 0.25, 0.25}), DTensor::from({1, 4}, {0, 0, 1, 0}));
    CHECK(l.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  TEST_CASE("soft target") {
    auto l = cross_entropy(DTensor::from({1, 2}, {0.5, 0.5}), DTensor::from({1, 2}, {0.5, 0.5}));
    CHECK(l.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  TEST_CASE("zero probability is clamped") {
    auto l = cross_entropy(DTensor::from({1, 2}, {1.0, 0.0}), DTensor::from({1, 2}, {0.0, 1.0}));
    CHECK(l.item() == doctest::Approx(-std::log(1e-7)).epsilon(1e-6));
  }
  TEST_CASE("gradient through softmax with soft targets") {
    std::mt19937_64 rng(18);
    auto logits = random_tensor({3, 4}, rng, -2, 2);
    auto t = DTensor::from({3, 4}, {0.5, 0.5, 0, 0, 0, 0, 1, 0, 0.2, 0.3, 0.1, 0.4});
    CHECK(finite_difference_check([&] { return cross_entropy(softmax(logits), t); }, {logits}).max_rel_error <=
          kOpTolerance);
  }
}

TEST_SUITE("sequence ops") {
  TEST_CASE("to_sequence flattens frequency-major per time step") {
    // N=1, F=2, T=2, C=2
    auto x = FTensor::from({1, 2, 2, 2}, iota_vec(8, 0.0f));
    auto y = to_sequence(x);
    CHECK(y.shape() == Shape{1, 2, 4});
    // t=0: (f0,c0)=0 (f0,c1)=1 (f1,c0)=4 (f1,c1)=5
    CHECK(y.to_vector() == std::vector<float>{0, 1, 4, 5, 2, 3, 6, 7});
  }
  TEST_CASE("gradients of the attention building blocks") {
    std::mt19937_64 rng(19);
    auto m = random_tensor({2, 3, 4, 2}, rng);
    auto a = random_tensor({2, 4}, rng);
    auto h = random_tensor({2, 4, 3}, rng);
    auto r4 = random_tensor({2, 3, 4, 2}, rng, -1, 1, false);
    auto r2 = random_tensor({2, 3}, rng, -1, 1, false);
    auto r3 = random_tensor({2, 4, 6}, rng, -1, 1, false);
    CHECK(finite_difference_check([&] { return project(scale_frames(m, a), r4); }, {m, a}).max_rel_error <=
          kOpTolerance);
    CHECK(finite_difference_check([&] { return project(weighted_sum_time(h, a), r2); }, {h, a}).max_rel_error <=
          kOpTolerance);
    CHECK(finite_difference_check([&] { return project(last_step(h), r2); }, {h}).max_rel_error <= kOpTolerance);
    CHECK(finite_difference_check([&] { return project(to_sequence(m), r3); }, {m}).max_rel_error <=
          kOpTolerance);
  }
}

TEST_SUITE("backward") {
  TEST_CASE("sum gives ones, sum of squares gives 2x") {
    auto x = DTensor::from({3}, {1.0, -2.0, 0.5}, true);
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
    x.zero_grad();
    backward(sum(mul(x, x)));
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[1] == doctest::Approx(-4.0));
    CHECK(x.grad()[2] == doctest::Approx(1.0));
  }
  TEST_CASE("repeated calls accumulate into leaves") {
    auto x = DTensor::from({2}, {1.0, 2.0}, true);
    auto loss = sum_squares(x);
    backward(loss);
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(4.0));
    CHECK(x.grad()[1] == doctest::Approx(8.0));
  }
  TEST_CASE("non-scalar loss is a contract error") {
    auto x = DTensor::from({2}, {1.0, 2.0}, true);
    CHECK_THROWS_AS(backward(scale(x, 2.0)), ContractError);
  }
  TEST_CASE("each node is visited exactly once on a diamond graph") {
    auto x = DTensor::from({2}, {1.0, 2.0}, true);
    auto a = tanh(x);         // 1
    auto b = scale(a, 2.0);   // 2
    auto c = sigmoid(a);      // 3
    auto d = add(b, c);       // 4
    auto e = mul(d, a);       // 5
    auto stats = backward(sum(e));  // 6
    CHECK(stats.nodes_visited == 6);
  }
  TEST_CASE("no graph is recorded under NoGradGuard") {
    auto x = DTensor::from({2}, {1.0, 2.0}, true);
    NoGradGuard guard;
    auto y = sum(x);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.is_leaf());
  }
}
