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

// Parallel kernels against their serial references on network-sized shapes.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "acrnn/kernels.hpp"
#include "acrnn/kernels_reference.hpp"

using namespace acrnn::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Same-padded stride-1 convolutions from the network, batch 4.
ConvGeometry layer(int which) {
  switch (which) {
    case 0: return {4, 128, 128, 2, 3, 5, 32, 1, 1, 1, 2, 128, 128};   // l1
    case 1: return {4, 32, 42, 32, 3, 1, 64, 1, 1, 1, 0, 32, 42};      // l3
    case 2: return {4, 8, 42, 64, 1, 5, 128, 1, 1, 0, 2, 8, 42};       // l5
    default: return {4, 8, 14, 128, 3, 3, 256, 1, 1, 1, 1, 8, 14};     // l7
  }
}

struct ConvData {
  ConvGeometry g;
  std::vector<float> in, kernel, bias, out, grad_out, grad_in, grad_kernel, grad_bias;
  explicit ConvData(int which)
      : g(layer(which)),
        in(random_vec(g.in_size(), 1)),
        kernel(random_vec(g.kernel_size(), 2)),
        bias(random_vec(g.out_c, 3)),
        out(g.out_size()),
        grad_out(random_vec(g.out_size(), 4)),
        grad_in(g.in_size()),
        grad_kernel(g.kernel_size()),
        grad_bias(g.out_c) {}
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  ConvData d(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      conv2d_forward(d.g, d.in.data(), d.kernel.data(), d.bias.data(), d.out.data());
    } else {
      reference::conv2d_forward(d.g, d.in.data(), d.kernel.data(), d.bias.data(), d.out.data());
    }
    benchmark::DoNotOptimize(d.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.g.out_size() * d.g.k_h * d.g.k_w * d.g.in_c));
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  ConvData d(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      conv2d_backward_input(d.g, d.grad_out.data(), d.kernel.data(), d.grad_in.data());
      conv2d_backward_params(d.g, d.in.data(), d.grad_out.data(), d.grad_kernel.data(), d.grad_bias.data());
    } else {
      reference::conv2d_backward_input(d.g, d.grad_out.data(), d.kernel.data(), d.grad_in.data());
      reference::conv2d_backward_params(d.g, d.in.data(), d.grad_out.data(), d.grad_kernel.data(), d.grad_bias.data());
    }
    benchmark::DoNotOptimize(d.grad_in.data());
    benchmark::DoNotOptimize(d.grad_kernel.data());
  }
}

// GRU input projection shapes: (batch * steps) x D times D x 3H.
template <bool Parallel>
void BM_GemmNN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto a = random_vec(m * k, 5), b = random_vec(k * n, 6);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      gemm_nn<float>({a.data(), m, k, k}, {b.data(), k, n, n}, {c.data(), m, n, n}, false);
    } else {
      reference::gemm_nn<float>({a.data(), m, k, k}, {b.data(), k, n, n}, {c.data(), m, n, n}, false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * n * k));
}

template <bool Parallel>
void BM_GemmTN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto a = random_vec(k * m, 7), b = random_vec(k * n, 8);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      gemm_tn<float>({a.data(), k, m, m}, {b.data(), k, n, n}, {c.data(), m, n, n}, false);
    } else {
      reference::gemm_tn<float>({a.data(), k, m, m}, {b.data(), k, n, n}, {c.data(), m, n, n}, false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * n * k));
}

template <bool Parallel>
void BM_MaxPool(benchmark::State& state) {
  const std::size_t n = 4, h = 128, w = 128, c = 32;
  const auto in = random_vec(n * h * w * c, 9);
  std::vector<float> out(n * (h / 4) * (w / 3) * c);
  std::vector<std::size_t> arg(out.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      maxpool2d_forward(n, h, w, c, 4, 3, in.data(), out.data(), arg.data());
    } else {
      reference::maxpool2d_forward(n, h, w, c, 4, 3, in.data(), out.data(), arg.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/openmp")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/openmp")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GemmNN<false>)->Name("gemm_nn/reference")->Args({448, 1024, 768})->Args({448, 512, 768})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GemmNN<true>)->Name("gemm_nn/openmp")->Args({448, 1024, 768})->Args({448, 512, 768})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GemmTN<false>)->Name("gemm_tn/reference")->Args({1024, 448, 768})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GemmTN<true>)->Name("gemm_tn/openmp")->Args({1024, 448, 768})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool<false>)->Name("maxpool/reference")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool<true>)->Name("maxpool/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
