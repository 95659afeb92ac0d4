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
#include <random>
#include <string>

#include "acrnn/errors.hpp"
#include "acrnn/model.hpp"

namespace acrnn::model {

namespace {

struct PoolSpec {
  std::size_t h, w;
};

// Pooling after the second conv of each pair (layers 2, 4, 6, 8).
constexpr std::array<PoolSpec, 4> kPools{{{4, 3}, {4, 1}, {1, 3}, {2, 2}}};
constexpr std::array<std::pair<std::size_t, std::size_t>, 4> kKernels{{{3, 5}, {3, 1}, {1, 5}, {3, 3}}};
constexpr std::array<const char*, 6> kPlacementNames{"none", "l2", "l4", "l6", "l8", "l10"};

}  // namespace

Placement parse_placement(const std::string& text) {
  for (std::size_t i = 0; i < kPlacementNames.size(); ++i) {
    if (text == kPlacementNames[i]) return static_cast<Placement>(i);
  }
  throw ContractError("unknown attention placement '" + text + "' (expected none, l2, l4, l6, l8 or l10)");
}

std::string placement_name(Placement p) { return kPlacementNames.at(static_cast<std::size_t>(p)); }

AttentionForm parse_attention_form(const std::string& text) {
  if (text == "mlp") return AttentionForm::Mlp;
  if (text == "linear") return AttentionForm::Linear;
  throw ContractError("unknown rnn attention form '" + text + "' (expected mlp or linear)");
}

std::string attention_form_name(AttentionForm f) { return f == AttentionForm::Mlp ? "mlp" : "linear"; }

void AcrnnConfig::validate() const {
  if (num_classes < 2) throw ContractError("model: num_classes must be >= 2");
  if (static_cast<std::size_t>(placement) >= kPlacementNames.size()) throw ContractError("model: bad placement");
  for (std::size_t c : channels)
    if (c == 0) throw ContractError("model: channel widths must be positive");
  if (gru_hidden == 0) throw ContractError("model: gru_hidden must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ContractError("model: dropout_p must be in [0, 1)");
  if (l2_coeff < 0.0) throw ContractError("model: l2_coeff must be >= 0");
  if (!(init_std > 0.0)) throw ContractError("model: init_std must be > 0");
  std::size_t f = input_freq, t = input_time;
  for (const auto& p : kPools) {
    f /= p.h;
    t /= p.w;
  }
  if (f == 0 || t == 0) {
    throw ContractError("model: input " + std::to_string(input_freq) + "x" + std::to_string(input_time) +
                        " is too small for the pooling stack");
  }
}

std::size_t AcrnnConfig::cnn_attention_layer() const {
  switch (placement) {
    case Placement::L2: return 2;
    case Placement::L4: return 4;
    case Placement::L6: return 6;
    case Placement::L8: return 8;
    default: return 0;
  }
}

template <typename T>
Tensor<T> cnn_attention(const Tensor<T>& m, const Tensor<T>& kernel, const Tensor<T>& bias, Tensor<T>* weights) {
  if (m.rank() != 4) throw DimensionError("cnn_attention: expected N x F x T x C, got " + ad::shape_str(m.shape()));
  const std::size_t n = m.dim(0), t = m.dim(2);
  const auto scores = ad::avgpool_freq(ad::conv2d(m, kernel, bias));
  const auto a = ad::softmax(ad::reshape(scores, {n, t}));
  if (weights) *weights = a;
  return ad::scale_frames(m, a);
}

template <typename T>
Tensor<T> rnn_attention(const Tensor<T>& h, AttentionForm form, const Tensor<T>& w1, const Tensor<T>& b1,
                        const Tensor<T>& w, Tensor<T>* weights) {
  if (h.rank() != 3) throw DimensionError("rnn_attention: expected N x T x D, got " + ad::shape_str(h.shape()));
  const std::size_t n = h.dim(0), t = h.dim(1), d = h.dim(2);
  const auto flat = ad::reshape(h, {n * t, d});
  Tensor<T> scores;
  if (form == AttentionForm::Mlp) {
    const auto u = ad::tanh(ad::dense(flat, w1, b1));
    scores = ad::dense(u, ad::reshape(w, {w.numel(), 1}), Tensor<T>{});
  } else {
    scores = ad::dense(flat, ad::reshape(w, {w.numel(), 1}), Tensor<T>{});
  }
  const auto beta = ad::softmax(ad::reshape(scores, {n, t}));
  if (weights) *weights = beta;
  return ad::weighted_sum_time(h, beta);
}

template <typename T>
Tensor<T> regularization_loss(const std::vector<Tensor<T>>& weights, double coeff) {
  Tensor<T> total;
  for (const auto& w : weights) {
    const auto s = ad::sum_squares(w);
    total = total.defined() ? ad::add(total, s) : s;
  }
  if (!total.defined()) return Tensor<T>::scalar(T(0));
  return ad::scale(total, static_cast<T>(coeff));
}

template <typename T>
void Acrnn<T>::add(std::string name, ParamKind kind, Tensor<T> tensor) {
  params_.push_back({std::move(name), kind, std::move(tensor)});
}

template <typename T>
Acrnn<T> Acrnn<T>::build(const AcrnnConfig& config, std::uint64_t seed) {
  config.validate();
  Acrnn net;
  net.config_ = config;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  auto gaussian = [&](ad::Shape shape) {
    auto t = Tensor<T>::zeros(std::move(shape), true);
    for (auto& v : t.mutable_data()) v = static_cast<T>(normal(rng));
    return t;
  };

  std::size_t in_c = 2, f = config.input_freq;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto [kh, kw] = kKernels[i / 2];
    const std::size_t out_c = config.channels[i];
    const std::string conv = "conv" + std::to_string(i + 1);
    const std::string bn = "bn" + std::to_string(i + 1);
    net.add(conv + ".kernel", ParamKind::Weight, gaussian({kh, kw, in_c, out_c}));
    net.add(conv + ".bias", ParamKind::Bias, Tensor<T>::zeros({out_c}, true));
    const auto state = ad::BatchNormState<T>::create(out_c);
    net.add(bn + ".gamma", ParamKind::BatchNorm, state.gamma);
    net.add(bn + ".beta", ParamKind::BatchNorm, state.beta);
    net.add(bn + ".running_mean", ParamKind::Buffer, state.running_mean);
    net.add(bn + ".running_var", ParamKind::Buffer, state.running_var);
    if (i % 2 == 1) {
      f /= kPools[i / 2].h;
      if (config.cnn_attention_layer() == i + 1) {
        net.add("att_cnn.kernel", ParamKind::Weight, gaussian({3, 3, out_c, 1}));
        net.add("att_cnn.bias", ParamKind::Bias, Tensor<T>::zeros({1}, true));
      }
    }
    in_c = out_c;
  }

  const std::size_t hidden = config.gru_hidden;
  std::size_t width = f * in_c;
  for (const char* layer : {"gru9", "gru10"}) {
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = std::string(layer) + "." + dir;
      net.add(p + ".W", ParamKind::Weight, gaussian({width, 3 * hidden}));
      net.add(p + ".U", ParamKind::Weight, gaussian({hidden, 3 * hidden}));
      net.add(p + ".b", ParamKind::Bias, Tensor<T>::zeros({3 * hidden}, true));
    }
    width = 2 * hidden;
  }

  if (config.placement == Placement::L10) {
    if (config.rnn_attention_form == AttentionForm::Mlp) {
      net.add("att_rnn.W1", ParamKind::Weight, gaussian({2 * hidden, hidden}));
      net.add("att_rnn.b1", ParamKind::Bias, Tensor<T>::zeros({hidden}, true));
      net.add("att_rnn.w", ParamKind::Weight, gaussian({hidden}));
    } else {
      net.add("att_rnn.w", ParamKind::Weight, gaussian({2 * hidden}));
    }
  }
  net.add("fc.W", ParamKind::Weight, gaussian({2 * hidden, config.num_classes}));
  net.add("fc.b", ParamKind::Bias, Tensor<T>::zeros({config.num_classes}, true));
  net.wire();
  return net;
}

template <typename T>
void Acrnn<T>::wire() {
  for (std::size_t i = 0; i < 8; ++i) {
    const std::string bn = "bn" + std::to_string(i + 1);
    bn_[i].gamma = at(bn + ".gamma");
    bn_[i].beta = at(bn + ".beta");
    bn_[i].running_mean = at(bn + ".running_mean");
    bn_[i].running_var = at(bn + ".running_var");
  }
  const std::array<const char*, 2> layers{"gru9", "gru10"}, dirs{"fwd", "bwd"};
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t d = 0; d < 2; ++d) {
      const std::string p = std::string(layers[l]) + "." + dirs[d];
      gru_[l][d] = {at(p + ".W"), at(p + ".U"), at(p + ".b")};
    }
}

template <typename T>
Acrnn<T> Acrnn<T>::clone() const {
  Acrnn copy;
  copy.config_ = config_;
  for (const auto& p : params_) {
    auto t = p.tensor.detach_copy();
    t.set_requires_grad(p.tensor.requires_grad());
    copy.params_.push_back({p.name, p.kind, std::move(t)});
  }
  copy.wire();
  return copy;
}

template <typename T>
Tensor<T>& Acrnn<T>::at(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p.tensor;
  throw ContractError("model has no tensor named '" + name + "'");
}

template <typename T>
const Tensor<T>& Acrnn<T>::at(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.tensor;
  throw ContractError("model has no tensor named '" + name + "'");
}

template <typename T>
std::vector<Tensor<T>> Acrnn<T>::trainable() const {
  std::vector<Tensor<T>> out;
  for (const auto& p : params_)
    if (p.kind != ParamKind::Buffer) out.push_back(p.tensor);
  return out;
}

template <typename T>
std::vector<Tensor<T>> Acrnn<T>::weights() const {
  std::vector<Tensor<T>> out;
  for (const auto& p : params_)
    if (p.kind == ParamKind::Weight) out.push_back(p.tensor);
  return out;
}

template <typename T>
std::size_t Acrnn<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : trainable()) n += t.numel();
  return n;
}

template <typename T>
Tensor<T> Acrnn<T>::regularization_loss() const {
  return model::regularization_loss(weights(), config_.l2_coeff);
}

template <typename T>
void Acrnn<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <typename T>
Tensor<T> Acrnn<T>::forward(const Tensor<T>& input, Mode mode, Rng& rng, ForwardTrace<T>* trace) {
  if (input.rank() != 4 || input.dim(1) != config_.input_freq || input.dim(2) != config_.input_time ||
      input.dim(3) != 2) {
    throw DimensionError("model input must be N x " + std::to_string(config_.input_freq) + " x " +
                         std::to_string(config_.input_time) + " x 2, got " + ad::shape_str(input.shape()));
  }
  auto record = [&](const char* name, const Tensor<T>& t) {
    if (trace) trace->shapes.emplace_back(name, ad::Shape(t.shape().begin() + 1, t.shape().end()));
  };
  static constexpr std::array<const char*, 4> kPoolNames{"l2-pool", "l4-pool", "l6-pool", "l8-pool"};

  Tensor<T> x = input;
  for (std::size_t i = 0; i < 8; ++i) {
    const std::string conv = "conv" + std::to_string(i + 1);
    x = ad::conv2d(x, at(conv + ".kernel"), at(conv + ".bias"));
    x = ad::relu(ad::batchnorm(x, bn_[i], mode));
    if (i % 2 == 1) {
      x = ad::maxpool2d(x, kPools[i / 2].h, kPools[i / 2].w);
      record(kPoolNames[i / 2], x);
      if (config_.cnn_attention_layer() == i + 1) {
        x = cnn_attention(x, at("att_cnn.kernel"), at("att_cnn.bias"), trace ? &trace->cnn_attention : nullptr);
      }
    }
  }

  Tensor<T> h = ad::to_sequence(x);
  record("gru-input", h);
  for (std::size_t l = 0; l < 2; ++l) {
    h = ad::gru_bidirectional(h, gru_[l][0], gru_[l][1]);
    h = ad::dropout(h, config_.dropout_p, mode, rng);
  }
  record("gru-output", h);

  Tensor<T> head;
  if (config_.placement == Placement::L10) {
    const bool mlp = config_.rnn_attention_form == AttentionForm::Mlp;
    head = rnn_attention(h, config_.rnn_attention_form, mlp ? at("att_rnn.W1") : Tensor<T>{},
                         mlp ? at("att_rnn.b1") : Tensor<T>{}, at("att_rnn.w"),
                         trace ? &trace->rnn_attention : nullptr);
  } else {
    head = ad::last_step(h);
  }
  record("head", head);
  const auto probs = ad::softmax(ad::dense(head, at("fc.W"), at("fc.b")));
  record("output", probs);
  return probs;
}

#define ACRNN_INSTANTIATE_MODEL(T)                                                                          \
  template Tensor<T> cnn_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*);       \
  template Tensor<T> rnn_attention(const Tensor<T>&, AttentionForm, const Tensor<T>&, const Tensor<T>&,    \
                                   const Tensor<T>&, Tensor<T>*);                                          \
  template Tensor<T> regularization_loss(const std::vector<Tensor<T>>&, double);                           \
  template class Acrnn<T>;

ACRNN_INSTANTIATE_MODEL(float)
ACRNN_INSTANTIATE_MODEL(double)

}  // namespace acrnn::model
