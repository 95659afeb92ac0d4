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

// Parallel kernels against their serial reference implementations.

#include <cmath>
#include <random>
#include <vector>

#include "acrnn/kernels.hpp"
#include "acrnn/kernels_reference.hpp"
#include "doctest.h"

using namespace acrnn::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ConvGeometry make_geometry(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> small(1, 4), extent(3, 9), stride(1, 2);
  ConvGeometry g;
  g.batch = small(rng);
  g.in_h = extent(rng);
  g.in_w = extent(rng);
  g.in_c = small(rng);
  g.k_h = std::min<std::size_t>(small(rng), g.in_h);
  g.k_w = std::min<std::size_t>(small(rng) + 1, g.in_w);
  g.out_c = small(rng);
  g.stride_h = stride(rng);
  g.stride_w = stride(rng);
  if (rng() % 2) {  // same-style padding
    g.out_h = (g.in_h + g.stride_h - 1) / g.stride_h;
    g.out_w = (g.in_w + g.stride_w - 1) / g.stride_w;
    g.pad_h = (g.k_h - 1) / 2;
    g.pad_w = (g.k_w - 1) / 2;
  } else {
    g.out_h = (g.in_h - g.k_h) / g.stride_h + 1;
    g.out_w = (g.in_w - g.k_w) / g.stride_w + 1;
  }
  return g;
}

}  // namespace

TEST_CASE("conv2d kernels match the serial reference on random geometries") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const ConvGeometry g = make_geometry(rng);
    CAPTURE(trial);
    const auto in = random_vec(g.in_size(), rng);
    const auto k = random_vec(g.kernel_size(), rng);
    const auto bias = random_vec(g.out_c, rng);
    const auto gout = random_vec(g.out_size(), rng);

    std::vector<double> out_par(g.out_size()), out_ref(g.out_size());
    conv2d_forward(g, in.data(), k.data(), bias.data(), out_par.data());
    reference::conv2d_forward(g, in.data(), k.data(), bias.data(), out_ref.data());
    CHECK(max_abs_diff(out_par, out_ref) < 1e-12);

    std::vector<double> gin_par(g.in_size(), 0.5), gin_ref(g.in_size(), 0.5);
    conv2d_backward_input(g, gout.data(), k.data(), gin_par.data());
    reference::conv2d_backward_input(g, gout.data(), k.data(), gin_ref.data());
    CHECK(max_abs_diff(gin_par, gin_ref) < 1e-12);

    std::vector<double> gk_par(g.kernel_size(), 0.0), gk_ref(g.kernel_size(), 0.0);
    std::vector<double> gb_par(g.out_c, 0.0), gb_ref(g.out_c, 0.0);
    conv2d_backward_params(g, in.data(), gout.data(), gk_par.data(), gb_par.data());
    reference::conv2d_backward_params(g, in.data(), gout.data(), gk_ref.data(), gb_ref.data());
    CHECK(max_abs_diff(gk_par, gk_ref) < 1e-12);
    CHECK(max_abs_diff(gb_par, gb_ref) < 1e-12);
  }
}

TEST_CASE("gemm variants match the serial reference, including strided views") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng), pad = trial % 3;
    const auto a = random_vec(m * (k + pad), rng);   // m x k, ld k + pad
    const auto at = random_vec(k * (m + pad), rng);  // k x m
    const auto b = random_vec(k * (n + pad), rng);   // k x n
    const auto bt = random_vec(n * (k + pad), rng);  // n x k
    const auto c0 = random_vec(m * (n + pad), rng);
    for (bool acc : {false, true}) {
      auto c1 = c0, c2 = c0;
      gemm_nn<double>({a.data(), m, k, k + pad}, {b.data(), k, n, n + pad}, {c1.data(), m, n, n + pad}, acc);
      reference::gemm_nn<double>({a.data(), m, k, k + pad}, {b.data(), k, n, n + pad}, {c2.data(), m, n, n + pad}, acc);
      CHECK(max_abs_diff(c1, c2) < 1e-12);

      c1 = c0;
      c2 = c0;
      gemm_tn<double>({at.data(), k, m, m + pad}, {b.data(), k, n, n + pad}, {c1.data(), m, n, n + pad}, acc);
      reference::gemm_tn<double>({at.data(), k, m, m + pad}, {b.data(), k, n, n + pad}, {c2.data(), m, n, n + pad},
                                 acc);
      CHECK(max_abs_diff(c1, c2) < 1e-12);

      c1 = c0;
      c2 = c0;
      gemm_nt<double>({a.data(), m, k, k + pad}, {bt.data(), n, k, k + pad}, {c1.data(), m, n, n + pad}, acc);
      reference::gemm_nt<double>({a.data(), m, k, k + pad}, {bt.data(), n, k, k + pad}, {c2.data(), m, n, n + pad},
                                 acc);
      CHECK(max_abs_diff(c1, c2) < 1e-12);
    }
  }
}

TEST_CASE("maxpool kernel matches the serial reference") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 3, h = 4 + rng() % 9, w = 3 + rng() % 9, c = 1 + rng() % 4;
    const std::size_t wh = 1 + rng() % 4, ww = 1 + rng() % 3;
    const auto in = random_vec(n * h * w * c, rng);
    const std::size_t out_n = n * (h / wh) * (w / ww) * c;
    std::vector<double> o1(out_n), o2(out_n);
    std::vector<std::size_t> a1(out_n), a2(out_n);
    maxpool2d_forward(n, h, w, c, wh, ww, in.data(), o1.data(), a1.data());
    reference::maxpool2d_forward(n, h, w, c, wh, ww, in.data(), o2.data(), a2.data());
    CHECK(o1 == o2);
    CHECK(a1 == a2);
  }
}

TEST_CASE("float conv forward is bitwise repeatable") {
  std::mt19937_64 rng(9);
  ConvGeometry g{2, 16, 12, 3, 3, 5, 8, 1, 1, 1, 2, 16, 12};
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> in(g.in_size()), k(g.kernel_size());
  for (auto& x : in) x = d(rng);
  for (auto& x : k) x = d(rng);
  std::vector<float> o1(g.out_size()), o2(g.out_size());
  conv2d_forward<float>(g, in.data(), k.data(), nullptr, o1.data());
  conv2d_forward<float>(g, in.data(), k.data(), nullptr, o2.data());
  CHECK(o1 == o2);
}
