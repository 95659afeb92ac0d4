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

// Serial, loop-per-definition versions of the kernels in kernels.hpp. Kept
// for testing and benchmarking; nothing on the training path calls these.

#include <cstddef>
#include <cstdint>

#include "acrnn/kernels.hpp"

namespace acrnn::kernels::reference {

namespace detail {

inline bool input_coord(std::size_t o, std::size_t k, std::size_t stride, std::size_t pad, std::size_t extent,
                        std::size_t& i) {
  const std::int64_t v = static_cast<std::int64_t>(o * stride + k) - static_cast<std::int64_t>(pad);
  if (v < 0 || v >= static_cast<std::int64_t>(extent)) return false;
  i = static_cast<std::size_t>(v);
  return true;
}

}  // namespace detail

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* kernel, const T* bias, T* out) {
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t oh = 0; oh < g.out_h; ++oh)
      for (std::size_t ow = 0; ow < g.out_w; ++ow)
        for (std::size_t co = 0; co < g.out_c; ++co) {
          T s = bias ? bias[co] : T(0);
          for (std::size_t kh = 0; kh < g.k_h; ++kh)
            for (std::size_t kw = 0; kw < g.k_w; ++kw) {
              std::size_t ih = 0, iw = 0;
              if (!detail::input_coord(oh, kh, g.stride_h, g.pad_h, g.in_h, ih)) continue;
              if (!detail::input_coord(ow, kw, g.stride_w, g.pad_w, g.in_w, iw)) continue;
              for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                s += in[((n * g.in_h + ih) * g.in_w + iw) * g.in_c + ci] *
                     kernel[((kh * g.k_w + kw) * g.in_c + ci) * g.out_c + co];
              }
            }
          out[((n * g.out_h + oh) * g.out_w + ow) * g.out_c + co] = s;
        }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_out, const T* kernel, T* grad_in) {
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t oh = 0; oh < g.out_h; ++oh)
      for (std::size_t ow = 0; ow < g.out_w; ++ow)
        for (std::size_t kh = 0; kh < g.k_h; ++kh)
          for (std::size_t kw = 0; kw < g.k_w; ++kw) {
            std::size_t ih = 0, iw = 0;
            if (!detail::input_coord(oh, kh, g.stride_h, g.pad_h, g.in_h, ih)) continue;
            if (!detail::input_coord(ow, kw, g.stride_w, g.pad_w, g.in_w, iw)) continue;
            for (std::size_t ci = 0; ci < g.in_c; ++ci)
              for (std::size_t co = 0; co < g.out_c; ++co) {
                grad_in[((n * g.in_h + ih) * g.in_w + iw) * g.in_c + ci] +=
                    grad_out[((n * g.out_h + oh) * g.out_w + ow) * g.out_c + co] *
                    kernel[((kh * g.k_w + kw) * g.in_c + ci) * g.out_c + co];
              }
          }
}

template <typename T>
void conv2d_backward_params(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_kernel, T* grad_bias) {
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t oh = 0; oh < g.out_h; ++oh)
      for (std::size_t ow = 0; ow < g.out_w; ++ow)
        for (std::size_t co = 0; co < g.out_c; ++co) {
          const T go = grad_out[((n * g.out_h + oh) * g.out_w + ow) * g.out_c + co];
          if (grad_bias) grad_bias[co] += go;
          if (!grad_kernel) continue;
          for (std::size_t kh = 0; kh < g.k_h; ++kh)
            for (std::size_t kw = 0; kw < g.k_w; ++kw) {
              std::size_t ih = 0, iw = 0;
              if (!detail::input_coord(oh, kh, g.stride_h, g.pad_h, g.in_h, ih)) continue;
              if (!detail::input_coord(ow, kw, g.stride_w, g.pad_w, g.in_w, iw)) continue;
              for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                grad_kernel[((kh * g.k_w + kw) * g.in_c + ci) * g.out_c + co] +=
                    in[((n * g.in_h + ih) * g.in_w + iw) * g.in_c + ci] * go;
              }
            }
        }
}

template <typename T>
void gemm_nn(ConstMatRef<T> a, ConstMatRef<T> b, MatRef<T> c, bool accumulate) {
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j) {
      T s = accumulate ? c(i, j) : T(0);
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
}

template <typename T>
void gemm_tn(ConstMatRef<T> a, ConstMatRef<T> b, MatRef<T> c, bool accumulate) {
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j) {
      T s = accumulate ? c(i, j) : T(0);
      for (std::size_t k = 0; k < a.rows; ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
}

template <typename T>
void gemm_nt(ConstMatRef<T> a, ConstMatRef<T> b, MatRef<T> c, bool accumulate) {
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j) {
      T s = accumulate ? c(i, j) : T(0);
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
}

template <typename T>
void maxpool2d_forward(std::size_t batch, std::size_t in_h, std::size_t in_w, std::size_t channels, std::size_t win_h,
                       std::size_t win_w, const T* in, T* out, std::size_t* argmax) {
  const std::size_t out_h = in_h / win_h;
  const std::size_t out_w = in_w / win_w;
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t oh = 0; oh < out_h; ++oh)
      for (std::size_t ow = 0; ow < out_w; ++ow)
        for (std::size_t c = 0; c < channels; ++c) {
          bool first = true;
          T best_v{};
          std::size_t best = 0;
          for (std::size_t dh = 0; dh < win_h; ++dh)
            for (std::size_t dw = 0; dw < win_w; ++dw) {
              const std::size_t idx = ((n * in_h + oh * win_h + dh) * in_w + ow * win_w + dw) * channels + c;
              if (first || in[idx] > best_v) {
                best_v = in[idx];
                best = idx;
                first = false;
              }
            }
          const std::size_t o = ((n * out_h + oh) * out_w + ow) * channels + c;
          out[o] = best_v;
          argmax[o] = best;
        }
}

}  // namespace acrnn::kernels::reference
