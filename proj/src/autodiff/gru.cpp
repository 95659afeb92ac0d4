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
#include <string>
#include <vector>

#include "acrnn/kernels.hpp"
#include "acrnn/ops.hpp"

namespace acrnn::ad {

namespace {

using kernels::ConstMatRef;
using kernels::MatRef;

struct GruDims {
  std::size_t batch, steps, in_dim, hidden;
};

template <typename T>
struct DirectionCache {
  // N x T x H each, indexed by time position.
  std::vector<T> z, r, n, rh, h;
};

template <typename T>
void check_direction(const GruParams<T>& p, std::size_t in_dim, std::size_t hidden, const char* which) {
  const auto fail = [&](const std::string& what) {
    throw DimensionError(std::string("gru_bidirectional (") + which + "): " + what);
  };
  if (!p.input_weights.defined() || !p.recurrent_weights.defined() || !p.bias.defined()) fail("missing parameters");
  if (p.input_weights.shape() != Shape{in_dim, 3 * hidden}) {
    fail("input weights " + shape_str(p.input_weights.shape()) + ", expected " + shape_str({in_dim, 3 * hidden}));
  }
  if (p.recurrent_weights.shape() != Shape{hidden, 3 * hidden}) {
    fail("recurrent weights " + shape_str(p.recurrent_weights.shape()));
  }
  if (p.bias.numel() != 3 * hidden) fail("bias " + shape_str(p.bias.shape()));
}

template <typename T>
T sigmoid_scalar(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Time position processed at step s.
inline std::size_t position(std::size_t s, std::size_t steps, bool reverse) { return reverse ? steps - 1 - s : s; }

template <typename T>
DirectionCache<T> run_direction(const GruDims& d, const T* x, const T* w, const T* u, const T* b, bool reverse,
                                T* out, std::size_t out_offset) {
  const std::size_t n_b = d.batch, n_t = d.steps, h_n = d.hidden, g3 = 3 * d.hidden;
  DirectionCache<T> c;
  const std::size_t cache_size = n_b * n_t * h_n;
  c.z.resize(cache_size);
  c.r.resize(cache_size);
  c.n.resize(cache_size);
  c.rh.resize(cache_size);
  c.h.resize(cache_size);

  // Input projections for every (n, t) row at once.
  std::vector<T> xw(n_b * n_t * g3);
  kernels::gemm_nn<T>({x, n_b * n_t, d.in_dim, d.in_dim}, {w, d.in_dim, g3, g3}, {xw.data(), n_b * n_t, g3, g3},
                      false);
  for (std::size_t row = 0; row < n_b * n_t; ++row)
    for (std::size_t j = 0; j < g3; ++j) xw[row * g3 + j] += b[j];

  std::vector<T> h_prev(n_b * h_n, T(0)), gh_zr(n_b * 2 * h_n), gh_n(n_b * h_n), rh(n_b * h_n);
  for (std::size_t s = 0; s < n_t; ++s) {
    const std::size_t t = position(s, n_t, reverse);
    kernels::gemm_nn<T>({h_prev.data(), n_b, h_n, h_n}, {u, h_n, 2 * h_n, g3}, {gh_zr.data(), n_b, 2 * h_n, 2 * h_n},
                        false);
    for (std::size_t i = 0; i < n_b; ++i) {
      const T* gx = xw.data() + (i * n_t + t) * g3;
      const std::size_t base = (i * n_t + t) * h_n;
      for (std::size_t j = 0; j < h_n; ++j) {
        const T z = sigmoid_scalar(gx[j] + gh_zr[i * 2 * h_n + j]);
        const T r = sigmoid_scalar(gx[h_n + j] + gh_zr[i * 2 * h_n + h_n + j]);
        c.z[base + j] = z;
        c.r[base + j] = r;
        rh[i * h_n + j] = r * h_prev[i * h_n + j];
      }
    }
    kernels::gemm_nn<T>({rh.data(), n_b, h_n, h_n}, {u + 2 * h_n, h_n, h_n, g3}, {gh_n.data(), n_b, h_n, h_n}, false);
    for (std::size_t i = 0; i < n_b; ++i) {
      const T* gx = xw.data() + (i * n_t + t) * g3;
      const std::size_t base = (i * n_t + t) * h_n;
      for (std::size_t j = 0; j < h_n; ++j) {
        const T cand = std::tanh(gx[2 * h_n + j] + gh_n[i * h_n + j]);
        const T z = c.z[base + j];
        const T h = (T(1) - z) * cand + z * h_prev[i * h_n + j];
        c.n[base + j] = cand;
        c.rh[base + j] = rh[i * h_n + j];
        c.h[base + j] = h;
        h_prev[i * h_n + j] = h;
        out[(i * n_t + t) * 2 * h_n + out_offset + j] = h;
      }
    }
  }
  return c;
}

template <typename T>
void backprop_direction(const GruDims& d, const DirectionCache<T>& c, const T* x, const T* w, const T* u,
                        bool reverse, const T* grad_out, std::size_t out_offset, T* gx, T* gw, T* gu, T* gb) {
  const std::size_t n_b = d.batch, n_t = d.steps, h_n = d.hidden, g3 = 3 * d.hidden;
  std::vector<T> d_gates(n_b * n_t * g3, T(0));
  std::vector<T> dh_carry(n_b * h_n, T(0)), dh_prev(n_b * h_n), h_prev(n_b * h_n), dan(n_b * h_n),
      d_rh(n_b * h_n), dzr(n_b * 2 * h_n), rh(n_b * h_n);

  for (std::size_t s_plus = n_t; s_plus > 0; --s_plus) {
    const std::size_t s = s_plus - 1;
    const std::size_t t = position(s, n_t, reverse);
    for (std::size_t i = 0; i < n_b; ++i)
      for (std::size_t j = 0; j < h_n; ++j) {
        h_prev[i * h_n + j] = s == 0 ? T(0) : c.h[(i * n_t + position(s - 1, n_t, reverse)) * h_n + j];
        rh[i * h_n + j] = c.rh[(i * n_t + t) * h_n + j];
      }
    for (std::size_t i = 0; i < n_b; ++i)
      for (std::size_t j = 0; j < h_n; ++j) {
        const std::size_t k = (i * n_t + t) * h_n + j;
        const T dh = grad_out[(i * n_t + t) * 2 * h_n + out_offset + j] + dh_carry[i * h_n + j];
        const T z = c.z[k], cand = c.n[k];
        const T hp = h_prev[i * h_n + j];
        dan[i * h_n + j] = dh * (T(1) - z) * (T(1) - cand * cand);
        dzr[i * 2 * h_n + j] = dh * (hp - cand) * z * (T(1) - z);
        dh_prev[i * h_n + j] = dh * z;
      }
    // Candidate path: a_n = x Wn + (r * h_prev) Un + bn.
    kernels::gemm_nt<T>({dan.data(), n_b, h_n, h_n}, {u + 2 * h_n, h_n, h_n, g3}, {d_rh.data(), n_b, h_n, h_n}, false);
    if (gu) {
      kernels::gemm_tn<T>({rh.data(), n_b, h_n, h_n}, {dan.data(), n_b, h_n, h_n}, {gu + 2 * h_n, h_n, h_n, g3}, true);
    }
    for (std::size_t i = 0; i < n_b; ++i)
      for (std::size_t j = 0; j < h_n; ++j) {
        const std::size_t k = (i * n_t + t) * h_n + j;
        const T r = c.r[k];
        const T dr = d_rh[i * h_n + j] * h_prev[i * h_n + j];
        dh_prev[i * h_n + j] += d_rh[i * h_n + j] * r;
        dzr[i * 2 * h_n + h_n + j] = dr * r * (T(1) - r);
      }
    if (gu) {
      kernels::gemm_tn<T>({h_prev.data(), n_b, h_n, h_n}, {dzr.data(), n_b, 2 * h_n, 2 * h_n},
                          {gu, h_n, 2 * h_n, g3}, true);
    }
    kernels::gemm_nt<T>({dzr.data(), n_b, 2 * h_n, 2 * h_n}, {u, h_n, 2 * h_n, g3}, {dh_prev.data(), n_b, h_n, h_n},
                        true);
    for (std::size_t i = 0; i < n_b; ++i) {
      T* dg = d_gates.data() + (i * n_t + t) * g3;
      for (std::size_t j = 0; j < 2 * h_n; ++j) dg[j] = dzr[i * 2 * h_n + j];
      for (std::size_t j = 0; j < h_n; ++j) dg[2 * h_n + j] = dan[i * h_n + j];
    }
    dh_carry = dh_prev;
  }

  const std::size_t rows = n_b * n_t;
  if (gw) kernels::gemm_tn<T>({x, rows, d.in_dim, d.in_dim}, {d_gates.data(), rows, g3, g3}, {gw, d.in_dim, g3, g3}, true);
  if (gb) {
    for (std::size_t row = 0; row < rows; ++row)
      for (std::size_t j = 0; j < g3; ++j) gb[j] += d_gates[row * g3 + j];
  }
  if (gx) {
    kernels::gemm_nt<T>({d_gates.data(), rows, g3, g3}, {w, d.in_dim, g3, g3}, {gx, rows, d.in_dim, d.in_dim}, true);
  }
}

template <typename T>
T* grad_or_null(TensorImpl<T>* t) {
  return t->requires_grad ? t->grad_buffer().data() : nullptr;
}

}  // namespace

template <typename T>
Tensor<T> gru_bidirectional(const Tensor<T>& input, const GruParams<T>& forward, const GruParams<T>& backward) {
  GruDims d{};
  const bool batched = input.rank() == 3;
  if (batched) {
    d.batch = input.dim(0);
    d.steps = input.dim(1);
    d.in_dim = input.dim(2);
  } else if (input.rank() == 2) {
    d.batch = 1;
    d.steps = input.dim(0);
    d.in_dim = input.dim(1);
  } else {
    throw DimensionError("gru_bidirectional: expected N x T x D or T x D input, got " + shape_str(input.shape()));
  }
  if (!forward.recurrent_weights.defined() || forward.recurrent_weights.rank() != 2) {
    throw DimensionError("gru_bidirectional: recurrent weights must be H x 3H");
  }
  d.hidden = forward.recurrent_weights.dim(0);
  check_direction(forward, d.in_dim, d.hidden, "forward");
  check_direction(backward, d.in_dim, d.hidden, "backward");

  const std::size_t width = 2 * d.hidden;
  std::vector<T> out(d.batch * d.steps * width);
  const T* x = input.data().data();
  auto fwd_cache = std::make_shared<DirectionCache<T>>(
      run_direction<T>(d, x, forward.input_weights.data().data(), forward.recurrent_weights.data().data(),
                       forward.bias.data().data(), false, out.data(), 0));
  auto bwd_cache = std::make_shared<DirectionCache<T>>(
      run_direction<T>(d, x, backward.input_weights.data().data(), backward.recurrent_weights.data().data(),
                       backward.bias.data().data(), true, out.data(), d.hidden));

  Shape out_shape = batched ? Shape{d.batch, d.steps, width} : Shape{d.steps, width};
  TensorImpl<T>* in = input.impl().get();
  TensorImpl<T>* fw = forward.input_weights.impl().get();
  TensorImpl<T>* fu = forward.recurrent_weights.impl().get();
  TensorImpl<T>* fb = forward.bias.impl().get();
  TensorImpl<T>* bw = backward.input_weights.impl().get();
  TensorImpl<T>* bu = backward.recurrent_weights.impl().get();
  TensorImpl<T>* bb = backward.bias.impl().get();
  return detail::make_result<T>(
      std::move(out_shape), std::move(out), "gru_bidirectional",
      {input.impl(), forward.input_weights.impl(), forward.recurrent_weights.impl(), forward.bias.impl(),
       backward.input_weights.impl(), backward.recurrent_weights.impl(), backward.bias.impl()},
      [=](const TensorImpl<T>& o) {
        T* gx = grad_or_null(in);
        backprop_direction<T>(d, *fwd_cache, in->data.data(), fw->data.data(), fu->data.data(), false, o.grad.data(),
                              0, gx, grad_or_null(fw), grad_or_null(fu), grad_or_null(fb));
        backprop_direction<T>(d, *bwd_cache, in->data.data(), bw->data.data(), bu->data.data(), true, o.grad.data(),
                              d.hidden, gx, grad_or_null(bw), grad_or_null(bu), grad_or_null(bb));
      });
}

template Tensor<float> gru_bidirectional(const Tensor<float>&, const GruParams<float>&, const GruParams<float>&);
template Tensor<double> gru_bidirectional(const Tensor<double>&, const GruParams<double>&, const GruParams<double>&);

}  // namespace acrnn::ad
