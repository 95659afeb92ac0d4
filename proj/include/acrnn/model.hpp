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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acrnn/ops.hpp"
#include "acrnn/random.hpp"
#include "acrnn/tensor.hpp"

namespace acrnn::model {

using ad::Mode;
using ad::Tensor;

enum class Placement { None, L2, L4, L6, L8, L10 };
enum class AttentionForm { Mlp, Linear };

/// "none", "l2", ..., "l10". Throws ContractError on anything else.
Placement parse_placement(const std::string& text);
std::string placement_name(Placement p);
AttentionForm parse_attention_form(const std::string& text);
std::string attention_form_name(AttentionForm f);

struct AcrnnConfig {
  std::size_t num_classes = 10;
  Placement placement = Placement::L10;
  std::array<std::size_t, 8> channels{32, 32, 64, 64, 128, 128, 256, 256};
  std::size_t gru_hidden = 256;
  double dropout_p = 0.5;
  double l2_coeff = 1e-4;
  std::size_t input_freq = 128;
  std::size_t input_time = 128;
  AttentionForm rnn_attention_form = AttentionForm::Mlp;
  double init_std = 0.05;

  void validate() const;
  /// Conv layer (1-based) whose pooled output gets CNN attention; 0 if none.
  std::size_t cnn_attention_layer() const;
};

enum class ParamKind { Weight, Bias, BatchNorm, Buffer };

template <typename T>
struct NamedTensor {
  std::string name;
  ParamKind kind;
  Tensor<T> tensor;
};

/// Layer outputs without the batch axis.
using ShapeTrace = std::vector<std::pair<std::string, ad::Shape>>;

/// Intermediate values a caller may want to inspect after a forward pass.
template <typename T>
struct ForwardTrace {
  ShapeTrace shapes;
  Tensor<T> cnn_attention;  // N x T at the attended layer
  Tensor<T> rnn_attention;  // N x Tseq
};

/// M' = M scaled per time column by softmax_T(avgpool_F(conv3x3(M))).
/// `weights`, when given, receives the N x T attention map.
template <typename T>
Tensor<T> cnn_attention(const Tensor<T>& m, const Tensor<T>& kernel, const Tensor<T>& bias,
                        Tensor<T>* weights = nullptr);

/// v = sum_t beta_t h_t with beta = softmax_t(w . tanh(W1 h_t + b1)) (Mlp)
/// or softmax_t(w . h_t) (Linear, w of length D and W1/b1 unused).
template <typename T>
Tensor<T> rnn_attention(const Tensor<T>& h, AttentionForm form, const Tensor<T>& w1, const Tensor<T>& b1,
                        const Tensor<T>& w, Tensor<T>* weights = nullptr);

/// coeff * sum of squares over the given tensors.
template <typename T>
Tensor<T> regularization_loss(const std::vector<Tensor<T>>& weights, double coeff);

template <typename T>
class Acrnn {
 public:
  Acrnn() = default;
  /// Gaussian(0, init_std^2) weights, zero biases, BN gamma 1 and beta 0.
  static Acrnn build(const AcrnnConfig& config, std::uint64_t seed);
  /// Deep copy; the result shares no storage with this model.
  Acrnn clone() const;

  /// N x F x T x 2 -> N x K class probabilities.
  Tensor<T> forward(const Tensor<T>& input, Mode mode, Rng& rng, ForwardTrace<T>* trace = nullptr);

  const AcrnnConfig& config() const { return config_; }
  /// Every named tensor, trainable and buffers, in a fixed order.
  const std::vector<NamedTensor<T>>& parameters() const { return params_; }
  std::vector<Tensor<T>> trainable() const;
  std::vector<Tensor<T>> weights() const;
  std::size_t parameter_count() const;
  Tensor<T> regularization_loss() const;
  void zero_grad();

  /// Looks up a tensor by name; throws ContractError if absent.
  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;

 private:
  void add(std::string name, ParamKind kind, Tensor<T> tensor);
  void wire();

  AcrnnConfig config_;
  std::vector<NamedTensor<T>> params_;
  std::array<ad::BatchNormState<T>, 8> bn_;
  std::array<std::array<ad::GruParams<T>, 2>, 2> gru_;  // [layer][direction]
};

}  // namespace acrnn::model
