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

#include <cstddef>
#include <utility>

#include "acrnn/random.hpp"
#include "acrnn/tensor.hpp"

namespace acrnn::ad {

enum class Padding { Same, Valid };
enum class Mode { Train, Infer };

// Spatial tensors are NHWC with H the frequency axis and W the time axis.
// Rank-3 inputs (H x W x C) are accepted wherever a batch axis is optional and
// produce rank-3 outputs.

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 std::pair<std::size_t, std::size_t> stride = {1, 1}, Padding padding = Padding::Same);

/// Non-overlapping max pooling (window == stride); trailing remainder dropped.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t window_h, std::size_t window_w);

/// Mean over the frequency axis: N x F x T x C -> N x 1 x T x C.
template <typename T>
Tensor<T> avgpool_freq(const Tensor<T>& input);

/// N x Din times Din x Dout plus optional bias (pass an undefined tensor to skip).
template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

/// Softmax over the last axis with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& input);

/// Weights of one GRU direction. Gate blocks are ordered update (z), reset (r),
/// candidate (n) along the 3H axis.
template <typename T>
struct GruParams {
  Tensor<T> input_weights;      // D x 3H
  Tensor<T> recurrent_weights;  // H x 3H
  Tensor<T> bias;               // 3H
};

/// Bidirectional GRU over N x T x D (or T x D); zero initial states.
/// Output step t is [forward h_t, backward h_t], width 2H.
///   z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br)
///   n = tanh(x Wn + (r * h) Un + bn), h' = (1 - z) * n + z * h
template <typename T>
Tensor<T> gru_bidirectional(const Tensor<T>& input, const GruParams<T>& forward, const GruParams<T>& backward);

template <typename T>
struct BatchNormState {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;  // not differentiated
  Tensor<T> running_var;
  T epsilon = T(1e-5);
  /// running = momentum * running + (1 - momentum) * batch statistic.
  T momentum = T(0.9);

  static BatchNormState create(std::size_t channels) {
    BatchNormState s;
    s.gamma = Tensor<T>::full({channels}, T(1), true);
    s.beta = Tensor<T>::zeros({channels}, true);
    s.running_mean = Tensor<T>::zeros({channels});
    s.running_var = Tensor<T>::full({channels}, T(1));
    return s;
  }
};

/// Per-channel normalization over every axis but the last. Train mode uses
/// batch statistics and updates the running statistics in `state`.
template <typename T>
Tensor<T> batchnorm(const Tensor<T>& input, BatchNormState<T>& state, Mode mode);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);
template <typename T>
Tensor<T> tanh(const Tensor<T>& input);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input);

/// Inverted dropout: train mode keeps each element with probability 1 - p
/// and scales it by 1 / (1 - p); infer mode is the identity.
template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double p, Mode mode, Rng& rng);

/// Mean over rows of -sum_k target_k * log(max(prob_k, 1e-7)).
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets);

template <typename T>
Tensor<T> sum(const Tensor<T>& input);
template <typename T>
Tensor<T> sum_squares(const Tensor<T>& input);
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& input, T factor);
template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape);

/// N x F x T x C -> N x T x (F*C); each time step flattens frequency-major.
template <typename T>
Tensor<T> to_sequence(const Tensor<T>& input);

/// Multiplies every (f, t, c) element by weights[n, t]: N x F x T x C, N x T.
template <typename T>
Tensor<T> scale_frames(const Tensor<T>& features, const Tensor<T>& weights);

/// sum_t weights[n, t] * seq[n, t, :]: N x T x D, N x T -> N x D.
template <typename T>
Tensor<T> weighted_sum_time(const Tensor<T>& seq, const Tensor<T>& weights);

/// seq[:, T-1, :]: N x T x D -> N x D.
template <typename T>
Tensor<T> last_step(const Tensor<T>& seq);

}  // namespace acrnn::ad
