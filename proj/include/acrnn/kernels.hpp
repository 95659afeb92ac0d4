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

// OpenMP-parallel compute kernels behind the autodiff ops. Every kernel has a
// serial counterpart in kernels_reference.hpp with the same signature; the
// test suite checks one against the other and bench/ times both.
//
// Each output element is written by exactly one thread, with a loop order
// that does not depend on the thread count, so results are bitwise
// reproducible across runs and thread counts.

#include <cstddef>
#include <cstdint>

namespace acrnn::kernels {

/// Layout of a 2-D convolution over NHWC tensors (H = frequency, W = time),
/// kernel stored as kh x kw x in_c x out_c.
struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_h = 0, in_w = 0, in_c = 0;
  std::size_t k_h = 0, k_w = 0, out_c = 0;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_h = 0, pad_w = 0;  // leading zero padding
  std::size_t out_h = 0, out_w = 0;

  std::size_t in_size() const { return batch * in_h * in_w * in_c; }
  std::size_t out_size() const { return batch * out_h * out_w * out_c; }
  std::size_t kernel_size() const { return k_h * k_w * in_c * out_c; }
};

/// Matrix operand view: rows x cols with leading dimension ld (row-major).
template <typename T>
struct MatRef {
  T* data;
  std::size_t rows, cols, ld;
  T& operator()(std::size_t r, std::size_t c) const { return data[r * ld + c]; }
};

template <typename T>
struct ConstMatRef {
  const T* data;
  std::size_t rows, cols, ld;
  ConstMatRef(const T* d, std::size_t r, std::size_t c, std::size_t l) : data(d), rows(r), cols(c), ld(l) {}
  ConstMatRef(MatRef<T> m) : data(m.data), rows(m.rows), cols(m.cols), ld(m.ld) {}  // NOLINT
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * ld + c]; }
};

/// out = bias + conv(in, kernel); out is overwritten.
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* kernel, const T* bias, T* out) {
  const auto rows = static_cast<std::int64_t>(g.batch * g.out_h);
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < rows; ++row) {
    const std::size_t n = static_cast<std::size_t>(row) / g.out_h;
    const std::size_t oh = static_cast<std::size_t>(row) % g.out_h;
    T* out_row = out + (n * g.out_h + oh) * g.out_w * g.out_c;
    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
      for (std::size_t co = 0; co < g.out_c; ++co) out_row[ow * g.out_c + co] = bias ? bias[co] : T(0);
    }
    for (std::size_t kh = 0; kh < g.k_h; ++kh) {
      const std::int64_t ih = static_cast<std::int64_t>(oh * g.stride_h + kh) - static_cast<std::int64_t>(g.pad_h);
      if (ih < 0 || ih >= static_cast<std::int64_t>(g.in_h)) continue;
      const T* in_row = in + (n * g.in_h + static_cast<std::size_t>(ih)) * g.in_w * g.in_c;
      for (std::size_t kw = 0; kw < g.k_w; ++kw) {
        const T* k_tap = kernel + (kh * g.k_w + kw) * g.in_c * g.out_c;
        for (std::size_t ow = 0; ow < g.out_w; ++ow) {
          const std::int64_t iw = static_cast<std::int64_t>(ow * g.stride_w + kw) - static_cast<std::int64_t>(g.pad_w);
          if (iw < 0 || iw >= static_cast<std::int64_t>(g.in_w)) continue;
          const T* x = in_row + static_cast<std::size_t>(iw) * g.in_c;
          T* acc = out_row + ow * g.out_c;
          for (std::size_t ci = 0; ci < g.in_c; ++ci) {
            const T xv = x[ci];
            const T* k_row = k_tap + ci * g.out_c;
#pragma omp simd
            for (std::size_t co = 0; co < g.out_c; ++co) acc[co] += xv * k_row[co];
          }
        }
      }
    }
  }
}

/// grad_in += d(out)/d(in)^T grad_out.
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_out, const T* kernel, T* grad_in) {
  const auto rows = static_cast<std::int64_t>(g.batch * g.in_h);
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < rows; ++row) {
    const std::size_t n = static_cast<std::size_t>(row) / g.in_h;
    const std::size_t ih = static_cast<std::size_t>(row) % g.in_h;
    T* gin_row = grad_in + (n * g.in_h + ih) * g.in_w * g.in_c;
    for (std::size_t kh = 0; kh < g.k_h; ++kh) {
      const std::int64_t num_h = static_cast<std::int64_t>(ih + g.pad_h) - static_cast<std::int64_t>(kh);
      if (num_h < 0 || num_h % static_cast<std::int64_t>(g.stride_h) != 0) continue;
      const std::size_t oh = static_cast<std::size_t>(num_h) / g.stride_h;
      if (oh >= g.out_h) continue;
      const T* gout_row = grad_out + (n * g.out_h + oh) * g.out_w * g.out_c;
      for (std::size_t kw = 0; kw < g.k_w; ++kw) {
        const T* k_tap = kernel + (kh * g.k_w + kw) * g.in_c * g.out_c;
        for (std::size_t iw = 0; iw < g.in_w; ++iw) {
          const std::int64_t num_w = static_cast<std::int64_t>(iw + g.pad_w) - static_cast<std::int64_t>(kw);
          if (num_w < 0 || num_w % static_cast<std::int64_t>(g.stride_w) != 0) continue;
          const std::size_t ow = static_cast<std::size_t>(num_w) / g.stride_w;
          if (ow >= g.out_w) continue;
          const T* go = gout_row + ow * g.out_c;
          T* gi = gin_row + iw * g.in_c;
          for (std::size_t ci = 0; ci < g.in_c; ++ci) {
            const T* k_row = k_tap + ci * g.out_c;
            T s = T(0);
#pragma omp simd reduction(+ : s)
            for (std::size_t co = 0; co < g.out_c; ++co) s += go[co] * k_row[co];
            gi[ci] += s;
          }
        }
      }
    }
  }
}

/// grad_kernel += sum over positions of in^T grad_out; grad_bias += column sums.
/// Either output pointer may be null.
template <typename T>
void conv2d_backward_params(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_kernel, T* grad_bias) {
  if (grad_kernel) {
    const auto taps = static_cast<std::int64_t>(g.k_h * g.k_w);
#pragma omp parallel for schedule(static)
    for (std::int64_t tap = 0; tap < taps; ++tap) {
      const std::size_t kh = static_cast<std::size_t>(tap) / g.k_w;
      const std::size_t kw = static_cast<std::size_t>(tap) % g.k_w;
      T* gk = grad_kernel + static_cast<std::size_t>(tap) * g.in_c * g.out_c;
      for (std::size_t n = 0; n < g.batch; ++n) {
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const std::int64_t ih = static_cast<std::int64_t>(oh * g.stride_h + kh) - static_cast<std::int64_t>(g.pad_h);
          if (ih < 0 || ih >= static_cast<std::int64_t>(g.in_h)) continue;
          const T* in_row = in + (n * g.in_h + static_cast<std::size_t>(ih)) * g.in_w * g.in_c;
          const T* gout_row = grad_out + (n * g.out_h + oh) * g.out_w * g.out_c;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const std::int64_t iw = static_cast<std::int64_t>(ow * g.stride_w + kw) - static_cast<std::int64_t>(g.pad_w);
            if (iw < 0 || iw >= static_cast<std::int64_t>(g.in_w)) continue;
            const T* x = in_row + static_cast<std::size_t>(iw) * g.in_c;
            const T* go = gout_row + ow * g.out_c;
            for (std::size_t ci = 0; ci < g.in_c; ++ci) {
              const T xv = x[ci];
              T* gk_row = gk + ci * g.out_c;
#pragma omp simd
              for (std::size_t co = 0; co < g.out_c; ++co) gk_row[co] += xv * go[co];
            }
          }
        }
      }
    }
  }
  if (grad_bias) {
    const std::size_t positions = g.batch * g.out_h * g.out_w;
    for (std::size_t p = 0; p < positions; ++p) {
      const T* go = grad_out + p * g.out_c;
      for (std::size_t co = 0; co < g.out_c; ++co) grad_bias[co] += go[co];
    }
  }
}

/// C (+)= A B.
template <typename T>
void gemm_nn(ConstMatRef<T> a, ConstMatRef<T> b, MatRef<T> c, bool accumulate) {
  const auto rows = static_cast<std::int64_t>(c.rows);
#pragma omp parallel for schedule(static) if (c.rows * c.cols * a.cols > 32768)
  for (std::int64_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    T* c_row = &c(r, 0);
    if (!accumulate) {
      for (std::size_t j = 0; j < c.cols; ++j) c_row[j] = T(0);
    }
    for (std::size_t k = 0; k < a.cols; ++k) {
      const T av = a(r, k);
      const T* b_row = &b(k, 0);
#pragma omp simd
      for (std::size_t j = 0; j < c.cols; ++j) c_row[j] += av * b_row[j];
    }
  }
}

/// C (+)= A^T B, with A stored as K x M.
template <typename T>
void gemm_tn(ConstMatRef<T> a, ConstMatRef<T> b, MatRef<T> c, bool accumulate) {
  const auto rows = static_cast<std::int64_t>(c.rows);
#pragma omp parallel for schedule(static) if (c.rows * c.cols * a.rows > 32768)
  for (std::int64_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    T* c_row = &c(r, 0);
    if (!accumulate) {
      for (std::size_t j = 0; j < c.cols; ++j) c_row[j] = T(0);
    }
    for (std::size_t k = 0; k < a.rows; ++k) {
      const T av = a(k, r);
      const T* b_row = &b(k, 0);
#pragma omp simd
      for (std::size_t j = 0; j < c.cols; ++j) c_row[j] += av * b_row[j];
    }
  }
}

/// C (+)= A B^T, with B stored as N x K.
template <typename T>
void gemm_nt(ConstMatRef<T> a, ConstMatRef<T> b, MatRef<T> c, bool accumulate) {
  const auto rows = static_cast<std::int64_t>(c.rows);
#pragma omp parallel for schedule(static) if (c.rows * c.cols * a.cols > 32768)
  for (std::int64_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    const T* a_row = &a(r, 0);
    for (std::size_t j = 0; j < c.cols; ++j) {
      const T* b_row = &b(j, 0);
      T s = T(0);
#pragma omp simd reduction(+ : s)
      for (std::size_t k = 0; k < a.cols; ++k) s += a_row[k] * b_row[k];
      c(r, j) = accumulate ? c(r, j) + s : s;
    }
  }
}

/// Non-overlapping max pooling over NHWC; records the flat input index of
/// each window's first maximum.
template <typename T>
void maxpool2d_forward(std::size_t batch, std::size_t in_h, std::size_t in_w, std::size_t channels, std::size_t win_h,
                       std::size_t win_w, const T* in, T* out, std::size_t* argmax) {
  const std::size_t out_h = in_h / win_h;
  const std::size_t out_w = in_w / win_w;
  const auto rows = static_cast<std::int64_t>(batch * out_h);
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < rows; ++row) {
    const std::size_t n = static_cast<std::size_t>(row) / out_h;
    const std::size_t oh = static_cast<std::size_t>(row) % out_h;
    for (std::size_t ow = 0; ow < out_w; ++ow) {
      for (std::size_t c = 0; c < channels; ++c) {
        std::size_t best = ((n * in_h + oh * win_h) * in_w + ow * win_w) * channels + c;
        T best_v = in[best];
        for (std::size_t dh = 0; dh < win_h; ++dh) {
          for (std::size_t dw = 0; dw < win_w; ++dw) {
            const std::size_t idx = ((n * in_h + oh * win_h + dh) * in_w + ow * win_w + dw) * channels + c;
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = ((n * out_h + oh) * out_w + ow) * channels + c;
        out[o] = best_v;
        argmax[o] = best;
      }
    }
  }
}

}  // namespace acrnn::kernels
