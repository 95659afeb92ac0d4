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

#include "acrnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "acrnn/kernels.hpp"

namespace acrnn::ad {

namespace {

template <typename T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

[[noreturn]] void dim_error(const std::string& op, const std::string& detail) {
  throw DimensionError(op + ": " + detail);
}

// Views a rank-3 (H x W x C) or rank-4 (N x H x W x C) tensor as rank 4.
struct Nhwc {
  std::size_t n, h, w, c;
  bool batched;
};

template <typename T>
Nhwc as_nhwc(const Tensor<T>& t, const char* op) {
  if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3), true};
  if (t.rank() == 3) return {1, t.dim(0), t.dim(1), t.dim(2), false};
  dim_error(op, "expected rank 3 or 4 input, got " + shape_str(t.shape()));
}

Shape nhwc_shape(const Nhwc& v, std::size_t h, std::size_t w, std::size_t c) {
  if (v.batched) return {v.n, h, w, c};
  return {h, w, c};
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) dim_error(op, "shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

template <typename T>
Tensor<T> unary_map(const Tensor<T>& input, const char* kind, T (*f)(T), T (*df_from_y)(T, T)) {
  std::vector<T> out(input.numel());
  const auto x = input.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>(input.shape(), std::move(out), kind, {input.impl()},
                                [in, df_from_y](const TensorImpl<T>& o) {
                                  if (!in->requires_grad) return;
                                  auto& gi = in->grad_buffer();
                                  for (std::size_t i = 0; i < gi.size(); ++i) {
                                    gi[i] += o.grad[i] * df_from_y(in->data[i], o.data[i]);
                                  }
                                });
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 std::pair<std::size_t, std::size_t> stride, Padding padding) {
  const Nhwc v = as_nhwc(input, "conv2d");
  if (kernel.rank() != 4) dim_error("conv2d", "kernel must be kh x kw x Cin x Cout, got " + shape_str(kernel.shape()));
  if (kernel.dim(2) != v.c) {
    dim_error("conv2d", "input has " + std::to_string(v.c) + " channels but kernel expects " +
                            std::to_string(kernel.dim(2)));
  }
  if (stride.first == 0 || stride.second == 0) throw ContractError("conv2d: stride components must be >= 1");
  const std::size_t out_c = kernel.dim(3);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_c)) {
    dim_error("conv2d", "bias shape " + shape_str(bias.shape()) + " for " + std::to_string(out_c) + " filters");
  }

  kernels::ConvGeometry g;
  g.batch = v.n;
  g.in_h = v.h;
  g.in_w = v.w;
  g.in_c = v.c;
  g.k_h = kernel.dim(0);
  g.k_w = kernel.dim(1);
  g.out_c = out_c;
  g.stride_h = stride.first;
  g.stride_w = stride.second;
  if (padding == Padding::Same) {
    g.out_h = (g.in_h + g.stride_h - 1) / g.stride_h;
    g.out_w = (g.in_w + g.stride_w - 1) / g.stride_w;
    const auto pad_total = [](std::size_t out, std::size_t s, std::size_t k, std::size_t in) {
      const std::size_t need = (out - 1) * s + k;
      return need > in ? need - in : std::size_t{0};
    };
    g.pad_h = pad_total(g.out_h, g.stride_h, g.k_h, g.in_h) / 2;
    g.pad_w = pad_total(g.out_w, g.stride_w, g.k_w, g.in_w) / 2;
  } else {
    if (g.k_h > g.in_h || g.k_w > g.in_w) {
      dim_error("conv2d", "kernel " + shape_str(kernel.shape()) + " larger than input " + shape_str(input.shape()));
    }
    g.out_h = (g.in_h - g.k_h) / g.stride_h + 1;
    g.out_w = (g.in_w - g.k_w) / g.stride_w + 1;
  }

  std::vector<T> out(g.out_size());
  kernels::conv2d_forward(g, input.data().data(), kernel.data().data(), bias.defined() ? bias.data().data() : nullptr,
                          out.data());

  TensorImpl<T>* in = input.impl().get();
  TensorImpl<T>* k = kernel.impl().get();
  TensorImpl<T>* b = bias.defined() ? bias.impl().get() : nullptr;
  std::vector<ImplPtr<T>> inputs{input.impl(), kernel.impl()};
  if (b) inputs.push_back(bias.impl());
  return detail::make_result<T>(nhwc_shape(v, g.out_h, g.out_w, out_c), std::move(out), "conv2d", std::move(inputs),
                                [g, in, k, b](const TensorImpl<T>& o) {
                                  if (in->requires_grad) {
                                    kernels::conv2d_backward_input(g, o.grad.data(), k->data.data(),
                                                                   in->grad_buffer().data());
                                  }
                                  T* gk = k->requires_grad ? k->grad_buffer().data() : nullptr;
                                  T* gb = (b && b->requires_grad) ? b->grad_buffer().data() : nullptr;
                                  if (gk || gb) kernels::conv2d_backward_params(g, in->data.data(), o.grad.data(), gk, gb);
                                });
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t window_h, std::size_t window_w) {
  const Nhwc v = as_nhwc(input, "maxpool2d");
  if (window_h == 0 || window_w == 0) throw ContractError("maxpool2d: window dims must be >= 1");
  if (window_h > v.h || window_w > v.w) {
    dim_error("maxpool2d", "window (" + std::to_string(window_h) + "," + std::to_string(window_w) +
                               ") larger than input " + shape_str(input.shape()));
  }
  const std::size_t out_h = v.h / window_h;
  const std::size_t out_w = v.w / window_w;
  std::vector<T> out(v.n * out_h * out_w * v.c);
  std::vector<std::size_t> argmax(out.size());
  kernels::maxpool2d_forward(v.n, v.h, v.w, v.c, window_h, window_w, input.data().data(), out.data(), argmax.data());
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>(nhwc_shape(v, out_h, out_w, v.c), std::move(out), "maxpool2d", {input.impl()},
                                [in, argmax = std::move(argmax)](const TensorImpl<T>& o) {
                                  if (!in->requires_grad) return;
                                  auto& gi = in->grad_buffer();
                                  for (std::size_t i = 0; i < argmax.size(); ++i) gi[argmax[i]] += o.grad[i];
                                });
}

template <typename T>
Tensor<T> avgpool_freq(const Tensor<T>& input) {
  const Nhwc v = as_nhwc(input, "avgpool_freq");
  const std::size_t plane = v.w * v.c;
  std::vector<T> out(v.n * plane, T(0));
  const auto x = input.data();
  const T inv = T(1) / static_cast<T>(v.h);
  for (std::size_t n = 0; n < v.n; ++n) {
    T* o = out.data() + n * plane;
    for (std::size_t f = 0; f < v.h; ++f) {
      const T* row = x.data() + (n * v.h + f) * plane;
      for (std::size_t j = 0; j < plane; ++j) o[j] += row[j];
    }
    for (std::size_t j = 0; j < plane; ++j) o[j] *= inv;
  }
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>(nhwc_shape(v, 1, v.w, v.c), std::move(out), "avgpool_freq", {input.impl()},
                                [in, v, plane, inv](const TensorImpl<T>& o) {
                                  if (!in->requires_grad) return;
                                  auto& gi = in->grad_buffer();
                                  for (std::size_t n = 0; n < v.n; ++n)
                                    for (std::size_t f = 0; f < v.h; ++f)
                                      for (std::size_t j = 0; j < plane; ++j)
                                        gi[(n * v.h + f) * plane + j] += o.grad[n * plane + j] * inv;
                                });
}

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.rank() != 2 || weight.rank() != 2) {
    dim_error("dense", "expected N x Din input and Din x Dout weight, got " + shape_str(input.shape()) + " and " +
                           shape_str(weight.shape()));
  }
  const std::size_t n = input.dim(0), din = input.dim(1), dout = weight.dim(1);
  if (weight.dim(0) != din) {
    dim_error("dense", "inner dims disagree: " + shape_str(input.shape()) + " x " + shape_str(weight.shape()));
  }
  if (bias.defined() && bias.numel() != dout) dim_error("dense", "bias shape " + shape_str(bias.shape()));

  std::vector<T> out(n * dout);
  kernels::gemm_nn<T>({input.data().data(), n, din, din}, {weight.data().data(), din, dout, dout},
                      {out.data(), n, dout, dout}, false);
  if (bias.defined()) {
    const auto b = bias.data();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < dout; ++j) out[r * dout + j] += b[j];
  }
  TensorImpl<T>* x = input.impl().get();
  TensorImpl<T>* w = weight.impl().get();
  TensorImpl<T>* b = bias.defined() ? bias.impl().get() : nullptr;
  std::vector<ImplPtr<T>> inputs{input.impl(), weight.impl()};
  if (b) inputs.push_back(bias.impl());
  return detail::make_result<T>(
      {n, dout}, std::move(out), "dense", std::move(inputs), [x, w, b, n, din, dout](const TensorImpl<T>& o) {
        if (x->requires_grad) {
          kernels::gemm_nt<T>({o.grad.data(), n, dout, dout}, {w->data.data(), din, dout, dout},
                              {x->grad_buffer().data(), n, din, din}, true);
        }
        if (w->requires_grad) {
          kernels::gemm_tn<T>({x->data.data(), n, din, din}, {o.grad.data(), n, dout, dout},
                              {w->grad_buffer().data(), din, dout, dout}, true);
        }
        if (b && b->requires_grad) {
          auto& gb = b->grad_buffer();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < dout; ++j) gb[j] += o.grad[r * dout + j];
        }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& input) {
  if (input.rank() == 0 || input.numel() == 0) dim_error("softmax", "empty input");
  const std::size_t k = input.shape().back();
  const std::size_t rows = input.numel() / k;
  const auto x = input.data();
  std::vector<T> out(input.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * k;
    T* yr = out.data() + r * k;
    const T mx = *std::max_element(xr, xr + k);
    T total = T(0);
    for (std::size_t j = 0; j < k; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    for (std::size_t j = 0; j < k; ++j) yr[j] /= total;
  }
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>(input.shape(), std::move(out), "softmax", {input.impl()},
                                [in, rows, k](const TensorImpl<T>& o) {
                                  if (!in->requires_grad) return;
                                  auto& gi = in->grad_buffer();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    const T* y = o.data.data() + r * k;
                                    const T* gy = o.grad.data() + r * k;
                                    T dot = T(0);
                                    for (std::size_t j = 0; j < k; ++j) dot += gy[j] * y[j];
                                    for (std::size_t j = 0; j < k; ++j) gi[r * k + j] += y[j] * (gy[j] - dot);
                                  }
                                });
}

template <typename T>
Tensor<T> batchnorm(const Tensor<T>& input, BatchNormState<T>& state, Mode mode) {
  if (input.rank() == 0) dim_error("batchnorm", "scalar input");
  const std::size_t c = input.shape().back();
  if (state.gamma.numel() != c || state.beta.numel() != c || state.running_mean.numel() != c ||
      state.running_var.numel() != c) {
    dim_error("batchnorm", "input has " + std::to_string(c) + " channels but state holds " +
                               std::to_string(state.gamma.numel()));
  }
  const std::size_t m = input.numel() / c;
  const auto x = input.data();
  const auto gamma = state.gamma.data();
  const auto beta = state.beta.data();

  std::vector<T> mean(c), inv_std(c);
  if (mode == Mode::Train) {
    std::vector<double> s(c, 0.0), ss(c, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < c; ++j) s[j] += static_cast<double>(x[i * c + j]);
    for (std::size_t j = 0; j < c; ++j) s[j] /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = static_cast<double>(x[i * c + j]) - s[j];
        ss[j] += d * d;
      }
    auto rm = state.running_mean.mutable_data();
    auto rv = state.running_var.mutable_data();
    for (std::size_t j = 0; j < c; ++j) {
      const double var = ss[j] / static_cast<double>(m);
      mean[j] = static_cast<T>(s[j]);
      inv_std[j] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(state.epsilon)));
      rm[j] = state.momentum * rm[j] + (T(1) - state.momentum) * static_cast<T>(s[j]);
      rv[j] = state.momentum * rv[j] + (T(1) - state.momentum) * static_cast<T>(var);
    }
  } else {
    const auto rm = state.running_mean.data();
    const auto rv = state.running_var.data();
    for (std::size_t j = 0; j < c; ++j) {
      mean[j] = rm[j];
      inv_std[j] = T(1) / std::sqrt(rv[j] + state.epsilon);
    }
  }

  std::vector<T> xhat(input.numel()), out(input.numel());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const std::size_t idx = i * c + j;
      xhat[idx] = (x[idx] - mean[j]) * inv_std[j];
      out[idx] = gamma[j] * xhat[idx] + beta[j];
    }

  TensorImpl<T>* in = input.impl().get();
  TensorImpl<T>* g = state.gamma.impl().get();
  TensorImpl<T>* b = state.beta.impl().get();
  const bool train = mode == Mode::Train;
  return detail::make_result<T>(
      input.shape(), std::move(out), "batchnorm", {input.impl(), state.gamma.impl(), state.beta.impl()},
      [in, g, b, m, c, train, xhat = std::move(xhat), inv_std = std::move(inv_std)](const TensorImpl<T>& o) {
        std::vector<T> sum_dy(c, T(0)), sum_dy_xhat(c, T(0));
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) {
            const T dy = o.grad[i * c + j];
            sum_dy[j] += dy;
            sum_dy_xhat[j] += dy * xhat[i * c + j];
          }
        if (g->requires_grad) {
          auto& gg = g->grad_buffer();
          for (std::size_t j = 0; j < c; ++j) gg[j] += sum_dy_xhat[j];
        }
        if (b->requires_grad) {
          auto& gb = b->grad_buffer();
          for (std::size_t j = 0; j < c; ++j) gb[j] += sum_dy[j];
        }
        if (!in->requires_grad) return;
        auto& gi = in->grad_buffer();
        const T inv_m = T(1) / static_cast<T>(m);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) {
            const std::size_t idx = i * c + j;
            const T scale_j = g->data[j] * inv_std[j];
            if (train) {
              gi[idx] += scale_j * (o.grad[idx] - inv_m * sum_dy[j] - xhat[idx] * inv_m * sum_dy_xhat[j]);
            } else {
              gi[idx] += scale_j * o.grad[idx];
            }
          }
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  return unary_map<T>(
      input, "relu", [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& input) {
  return unary_map<T>(
      input, "tanh", [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  return unary_map<T>(
      input, "sigmoid", [](T x) { return T(1) / (T(1) + std::exp(-x)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ContractError("dropout: p must lie in [0, 1), got " + std::to_string(p));
  if (mode == Mode::Infer || p == 0.0) return input;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(input.numel());
  for (auto& mv : mask) mv = unit(rng) >= p ? keep_scale : T(0);
  std::vector<T> out(input.numel());
  const auto x = input.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * mask[i];
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>(input.shape(), std::move(out), "dropout", {input.impl()},
                                [in, mask = std::move(mask)](const TensorImpl<T>& o) {
                                  if (!in->requires_grad) return;
                                  auto& gi = in->grad_buffer();
                                  for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += o.grad[i] * mask[i];
                                });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets) {
  if (probs.rank() != 2) dim_error("cross_entropy", "expected N x K probabilities, got " + shape_str(probs.shape()));
  require_same_shape(probs, targets, "cross_entropy");
  const std::size_t n = probs.dim(0);
  const T floor = T(1e-7);
  const auto p = probs.data();
  const auto t = targets.data();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (t[i] != T(0)) total -= static_cast<double>(t[i]) * std::log(static_cast<double>(std::max(p[i], floor)));
  }
  TensorImpl<T>* pi = probs.impl().get();
  TensorImpl<T>* ti = targets.impl().get();
  return detail::make_result<T>({1}, {static_cast<T>(total / static_cast<double>(n))}, "cross_entropy",
                                {probs.impl(), targets.impl()}, [pi, ti, n, floor](const TensorImpl<T>& o) {
                                  if (!pi->requires_grad) return;
                                  auto& gp = pi->grad_buffer();
                                  const T g = o.grad[0] / static_cast<T>(n);
                                  for (std::size_t i = 0; i < gp.size(); ++i) {
                                    if (pi->data[i] > floor) gp[i] -= g * ti->data[i] / pi->data[i];
                                  }
                                });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& input) {
  T total = T(0);
  for (T v : input.data()) total += v;
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>({1}, {total}, "sum", {input.impl()}, [in](const TensorImpl<T>& o) {
    if (!in->requires_grad) return;
    for (auto& gv : in->grad_buffer()) gv += o.grad[0];
  });
}

template <typename T>
Tensor<T> sum_squares(const Tensor<T>& input) {
  T total = T(0);
  for (T v : input.data()) total += v * v;
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>({1}, {total}, "sum_squares", {input.impl()}, [in](const TensorImpl<T>& o) {
    if (!in->requires_grad) return;
    auto& gi = in->grad_buffer();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += T(2) * in->data[i] * o.grad[0];
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  TensorImpl<T>* ai = a.impl().get();
  TensorImpl<T>* bi = b.impl().get();
  return detail::make_result<T>(a.shape(), std::move(out), "add", {a.impl(), b.impl()},
                                [ai, bi](const TensorImpl<T>& o) {
                                  for (TensorImpl<T>* t : {ai, bi}) {
                                    if (!t->requires_grad) continue;
                                    auto& g = t->grad_buffer();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  TensorImpl<T>* ai = a.impl().get();
  TensorImpl<T>* bi = b.impl().get();
  return detail::make_result<T>(a.shape(), std::move(out), "mul", {a.impl(), b.impl()},
                                [ai, bi](const TensorImpl<T>& o) {
                                  if (ai->requires_grad) {
                                    auto& g = ai->grad_buffer();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * bi->data[i];
                                  }
                                  if (bi->requires_grad) {
                                    auto& g = bi->grad_buffer();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * ai->data[i];
                                  }
                                });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& input, T factor) {
  std::vector<T> out(input.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = input[i] * factor;
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>(input.shape(), std::move(out), "scale", {input.impl()},
                                [in, factor](const TensorImpl<T>& o) {
                                  if (!in->requires_grad) return;
                                  auto& g = in->grad_buffer();
                                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor;
                                });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape) {
  if (shape_numel(shape) != input.numel()) {
    dim_error("reshape", shape_str(input.shape()) + " to " + shape_str(shape));
  }
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>(std::move(shape), input.to_vector(), "reshape", {input.impl()},
                                [in](const TensorImpl<T>& o) {
                                  if (!in->requires_grad) return;
                                  auto& g = in->grad_buffer();
                                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                                });
}

template <typename T>
Tensor<T> to_sequence(const Tensor<T>& input) {
  if (input.rank() != 4) dim_error("to_sequence", "expected N x F x T x C, got " + shape_str(input.shape()));
  const std::size_t n = input.dim(0), f = input.dim(1), t = input.dim(2), c = input.dim(3);
  const std::size_t width = f * c;
  std::vector<T> out(input.numel());
  const auto x = input.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t fi = 0; fi < f; ++fi)
      for (std::size_t ti = 0; ti < t; ++ti)
        for (std::size_t ci = 0; ci < c; ++ci)
          out[(b * t + ti) * width + fi * c + ci] = x[((b * f + fi) * t + ti) * c + ci];
  TensorImpl<T>* in = input.impl().get();
  return detail::make_result<T>({n, t, width}, std::move(out), "to_sequence", {input.impl()},
                                [in, n, f, t, c, width](const TensorImpl<T>& o) {
                                  if (!in->requires_grad) return;
                                  auto& g = in->grad_buffer();
                                  for (std::size_t b = 0; b < n; ++b)
                                    for (std::size_t fi = 0; fi < f; ++fi)
                                      for (std::size_t ti = 0; ti < t; ++ti)
                                        for (std::size_t ci = 0; ci < c; ++ci)
                                          g[((b * f + fi) * t + ti) * c + ci] +=
                                              o.grad[(b * t + ti) * width + fi * c + ci];
                                });
}

template <typename T>
Tensor<T> scale_frames(const Tensor<T>& features, const Tensor<T>& weights) {
  if (features.rank() != 4 || weights.rank() != 2 || weights.dim(0) != features.dim(0) ||
      weights.dim(1) != features.dim(2)) {
    dim_error("scale_frames", "features " + shape_str(features.shape()) + " with weights " +
                                  shape_str(weights.shape()));
  }
  const std::size_t n = features.dim(0), f = features.dim(1), t = features.dim(2), c = features.dim(3);
  std::vector<T> out(features.numel());
  const auto m = features.data();
  const auto a = weights.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t fi = 0; fi < f; ++fi)
      for (std::size_t ti = 0; ti < t; ++ti) {
        const T w = a[b * t + ti];
        const std::size_t base = ((b * f + fi) * t + ti) * c;
        for (std::size_t ci = 0; ci < c; ++ci) out[base + ci] = m[base + ci] * w;
      }
  TensorImpl<T>* mi = features.impl().get();
  TensorImpl<T>* ai = weights.impl().get();
  return detail::make_result<T>(features.shape(), std::move(out), "scale_frames", {features.impl(), weights.impl()},
                                [mi, ai, n, f, t, c](const TensorImpl<T>& o) {
                                  T* gm = mi->requires_grad ? mi->grad_buffer().data() : nullptr;
                                  T* ga = ai->requires_grad ? ai->grad_buffer().data() : nullptr;
                                  for (std::size_t b = 0; b < n; ++b)
                                    for (std::size_t fi = 0; fi < f; ++fi)
                                      for (std::size_t ti = 0; ti < t; ++ti) {
                                        const std::size_t base = ((b * f + fi) * t + ti) * c;
                                        const T w = ai->data[b * t + ti];
                                        T acc = T(0);
                                        for (std::size_t ci = 0; ci < c; ++ci) {
                                          if (gm) gm[base + ci] += o.grad[base + ci] * w;
                                          acc += o.grad[base + ci] * mi->data[base + ci];
                                        }
                                        if (ga) ga[b * t + ti] += acc;
                                      }
                                });
}

template <typename T>
Tensor<T> weighted_sum_time(const Tensor<T>& seq, const Tensor<T>& weights) {
  if (seq.rank() != 3 || weights.rank() != 2 || weights.dim(0) != seq.dim(0) || weights.dim(1) != seq.dim(1)) {
    dim_error("weighted_sum_time", "sequence " + shape_str(seq.shape()) + " with weights " +
                                       shape_str(weights.shape()));
  }
  const std::size_t n = seq.dim(0), t = seq.dim(1), d = seq.dim(2);
  std::vector<T> out(n * d, T(0));
  const auto h = seq.data();
  const auto w = weights.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ti = 0; ti < t; ++ti) {
      const T wt = w[b * t + ti];
      for (std::size_t j = 0; j < d; ++j) out[b * d + j] += wt * h[(b * t + ti) * d + j];
    }
  TensorImpl<T>* hi = seq.impl().get();
  TensorImpl<T>* wi = weights.impl().get();
  return detail::make_result<T>({n, d}, std::move(out), "weighted_sum_time", {seq.impl(), weights.impl()},
                                [hi, wi, n, t, d](const TensorImpl<T>& o) {
                                  T* gh = hi->requires_grad ? hi->grad_buffer().data() : nullptr;
                                  T* gw = wi->requires_grad ? wi->grad_buffer().data() : nullptr;
                                  for (std::size_t b = 0; b < n; ++b)
                                    for (std::size_t ti = 0; ti < t; ++ti) {
                                      const T wt = wi->data[b * t + ti];
                                      T acc = T(0);
                                      for (std::size_t j = 0; j < d; ++j) {
                                        const T go = o.grad[b * d + j];
                                        if (gh) gh[(b * t + ti) * d + j] += wt * go;
                                        acc += go * hi->data[(b * t + ti) * d + j];
                                      }
                                      if (gw) gw[b * t + ti] += acc;
                                    }
                                });
}

template <typename T>
Tensor<T> last_step(const Tensor<T>& seq) {
  if (seq.rank() != 3 || seq.dim(1) == 0) dim_error("last_step", "expected N x T x D, got " + shape_str(seq.shape()));
  const std::size_t n = seq.dim(0), t = seq.dim(1), d = seq.dim(2);
  std::vector<T> out(n * d);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t j = 0; j < d; ++j) out[b * d + j] = seq[(b * t + t - 1) * d + j];
  TensorImpl<T>* hi = seq.impl().get();
  return detail::make_result<T>({n, d}, std::move(out), "last_step", {seq.impl()},
                                [hi, n, t, d](const TensorImpl<T>& o) {
                                  if (!hi->requires_grad) return;
                                  auto& g = hi->grad_buffer();
                                  for (std::size_t b = 0; b < n; ++b)
                                    for (std::size_t j = 0; j < d; ++j) g[(b * t + t - 1) * d + j] += o.grad[b * d + j];
                                });
}

#define ACRNN_INSTANTIATE_OPS(T)                                                                                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                               \
                            std::pair<std::size_t, std::size_t>, Padding);                                       \
  template Tensor<T> maxpool2d(const Tensor<T>&, std::size_t, std::size_t);                                     \
  template Tensor<T> avgpool_freq(const Tensor<T>&);                                                            \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> softmax(const Tensor<T>&);                                                                 \
  template Tensor<T> batchnorm(const Tensor<T>&, BatchNormState<T>&, Mode);                                     \
  template Tensor<T> relu(const Tensor<T>&);                                                                    \
  template Tensor<T> tanh(const Tensor<T>&);                                                                    \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                                 \
  template Tensor<T> dropout(const Tensor<T>&, double, Mode, Rng&);                                             \
  template Tensor<T> cross_entropy(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> sum(const Tensor<T>&);                                                                     \
  template Tensor<T> sum_squares(const Tensor<T>&);                                                             \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> scale(const Tensor<T>&, T);                                                                \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                          \
  template Tensor<T> to_sequence(const Tensor<T>&);                                                             \
  template Tensor<T> scale_frames(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> weighted_sum_time(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> last_step(const Tensor<T>&);

ACRNN_INSTANTIATE_OPS(float)
ACRNN_INSTANTIATE_OPS(double)

#undef ACRNN_INSTANTIATE_OPS

}  // namespace acrnn::ad
