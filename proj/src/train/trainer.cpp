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

#include "acrnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "acrnn/checkpoint.hpp"
#include "acrnn/errors.hpp"
#include "acrnn/evaluator.hpp"

namespace acrnn::train {

namespace {

// Seed streams, so that batch order, dropout masks and initialization do not
// perturb one another.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kDropoutStream = 3;

void assert_disjoint(const std::set<std::string>& used, const std::set<std::string>& held_out, const char* stage) {
  for (const auto& id : used) {
    if (held_out.count(id)) {
      throw std::logic_error(std::string("leakage: held-out clip '") + id + "' reached " + stage);
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ContractError("train: batch_size must be >= 1");
  if (epochs == 0) throw ContractError("train: epochs must be >= 1");
  if (!(lr0 > 0.0)) throw ContractError("train: lr0 must be > 0");
  if (!(lr_decay_factor >= 1.0)) throw ContractError("train: lr_decay_factor must be >= 1");
  if (lr_decay_every == 0) throw ContractError("train: lr_decay_every must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractError("train: momentum must be in [0, 1)");
  if (l2_coeff < 0.0) throw ContractError("train: l2_coeff must be >= 0");
  augmentation.validate();
}

double lr_schedule(std::size_t epoch, const TrainConfig& config) {
  if (epoch >= config.epochs) {
    throw ContractError("lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                        std::to_string(config.epochs) + ")");
  }
  const auto steps = static_cast<double>(epoch / config.lr_decay_every);
  return config.lr0 / std::pow(config.lr_decay_factor, steps);
}

template <typename T>
void sgd_nesterov_step(std::span<ParamSlot<T>> params, OptimizerState<T>& state, double lr, double momentum,
                       double l2_coeff) {
  if (state.velocity.empty()) {
    for (const auto& p : params) state.velocity.emplace_back(p.tensor.numel(), T(0));
  }
  if (state.velocity.size() != params.size()) {
    throw ContractError("sgd_nesterov_step: optimizer state holds " + std::to_string(state.velocity.size()) +
                        " buffers for " + std::to_string(params.size()) + " parameters");
  }
  const T mu = static_cast<T>(momentum), eta = static_cast<T>(lr), l2 = static_cast<T>(l2_coeff);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto& v = state.velocity[k];
    if (v.size() != p.tensor.numel()) throw ContractError("sgd_nesterov_step: velocity shape mismatch");
    auto w = p.tensor.mutable_data();
    const bool has_grad = p.tensor.has_grad();
    const auto g = p.tensor.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      T gi = has_grad ? g[i] : T(0);
      if (p.decay) gi += l2 * w[i];
      v[i] = mu * v[i] - eta * gi;
      w[i] += mu * v[i] - eta * gi;
    }
  }
}

template void sgd_nesterov_step(std::span<ParamSlot<float>>, OptimizerState<float>&, double, double, double);
template void sgd_nesterov_step(std::span<ParamSlot<double>>, OptimizerState<double>&, double, double, double);

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,lr,train_loss,train_acc,val_acc,seconds\n";
  out << std::setprecision(9);
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.lr << ',' << e.train_loss << ',' << e.train_acc << ',';
    if (std::isnan(e.val_acc)) {
      out << "nan";
    } else {
      out << e.val_acc;
    }
    out << ',' << std::setprecision(4) << e.seconds << std::setprecision(9) << '\n';
  }
  return out.str();
}

ad::Tensor<float> batch_tensor(std::span<const dsp::LogGTSegment* const> segments, const dsp::NormStats& norm) {
  std::vector<float> data(segments.size() * dsp::kSegmentValues);
  for (std::size_t n = 0; n < segments.size(); ++n) {
    const auto& src = segments[n]->values;
    float* dst = data.data() + n * dsp::kSegmentValues;
    for (std::size_t i = 0; i < dsp::kSegmentValues; ++i) {
      const std::size_t c = i % dsp::kChannels;
      dst[i] = (src[i] - norm.mean[c]) / norm.std[c];
    }
  }
  return ad::Tensor<float>::from({segments.size(), dsp::kBands, dsp::kSegmentFrames, dsp::kChannels},
                                 std::move(data));
}

TrainResult train(const std::vector<dsp::LogGTSegment>& segments, const model::AcrnnConfig& model_config,
                  const TrainConfig& config, std::uint32_t held_out_fold, const TrainOptions& options) {
  config.validate();
  model_config.validate();
  if (model_config.input_freq != dsp::kBands || model_config.input_time != dsp::kSegmentFrames) {
    throw ContractError("train: model input must be 128 x 128 to consume Log-GT segments");
  }
  const std::size_t k = model_config.num_classes;

  std::vector<const dsp::LogGTSegment*> train_set, val_set;
  std::set<std::string> held_out_clips;
  for (const auto& s : segments) {
    if (s.label >= k) {
      throw ContractError("train: segment of clip '" + s.clip_id + "' has label " + std::to_string(s.label) +
                          " but the model has " + std::to_string(k) + " classes");
    }
    if (held_out_fold != 0 && s.fold == held_out_fold) {
      held_out_clips.insert(s.clip_id);
      if (!s.augmented()) val_set.push_back(&s);
    } else if (!s.augmented() || config.use_augmented_segments) {
      train_set.push_back(&s);
    }
  }
  if (train_set.empty()) throw ContractError("train: no training segments outside the held-out fold");

  TrainResult result;
  auto& audit = result.audit;
  for (const auto* s : train_set) {
    audit.norm_clips.insert(s->clip_id);
    if (s->augmented()) audit.augmented_clips.insert(s->clip_id);
  }
  for (const auto* s : val_set) audit.validation_clips.insert(s->clip_id);
  assert_disjoint(audit.norm_clips, held_out_clips, "normalization statistics");
  assert_disjoint(audit.augmented_clips, held_out_clips, "augmentation");

  result.norm = dsp::compute_norm_stats(train_set);
  auto net = model::Acrnn<float>::build(model_config, derive_seed(config.seed, kInitStream));
  std::vector<ParamSlot<float>> slots;
  for (const auto& p : net.parameters()) {
    if (p.kind == model::ParamKind::Buffer) continue;
    slots.push_back({p.tensor, p.kind == model::ParamKind::Weight});
  }
  OptimizerState<float> opt;
  Rng batch_rng(derive_seed(config.seed, kBatchStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));

  std::vector<std::size_t> order(train_set.size());
  std::vector<const dsp::LogGTSegment*> batch;
  std::size_t steps = 0;
  bool have_best = false;
  result.best_val_acc = -1.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (options.max_steps && steps >= options.max_steps) break;
    const auto start = std::chrono::steady_clock::now();
    const double lr = lr_schedule(epoch, config);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), batch_rng);

    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    std::set<std::string> epoch_clips;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      if (options.max_steps && steps >= options.max_steps) break;
      const std::size_t n = std::min(config.batch_size, order.size() - begin);
      batch.clear();
      for (std::size_t i = 0; i < n; ++i) batch.push_back(train_set[order[begin + i]]);

      auto x = batch_tensor(batch, result.norm);
      std::vector<float> y(n * k, 0.0f);
      for (std::size_t i = 0; i < n; ++i) y[i * k + batch[i]->label] = 1.0f;
      if (config.augmentation.mixup_enabled) {
        const auto xs = x.to_vector();
        const auto ys = y;
        auto xm = x.mutable_data();
        std::uniform_int_distribution<std::size_t> partner(0, n - 1);
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t j = partner(batch_rng);
          const auto lambda = static_cast<float>(augment::sample_lambda(config.augmentation.mixup_alpha, batch_rng));
          const auto seg = dsp::kSegmentValues;
          augment::mix(std::span(xs).subspan(i * seg, seg), std::span(xs).subspan(j * seg, seg), lambda,
                       xm.subspan(i * seg, seg));
          augment::mix(std::span(ys).subspan(i * k, k), std::span(ys).subspan(j * k, k), lambda,
                       std::span(y).subspan(i * k, k));
        }
      }
      for (const auto* s : batch) epoch_clips.insert(s->clip_id);

      net.zero_grad();
      const auto probs = net.forward(x, ad::Mode::Train, dropout_rng);
      const auto loss = ad::cross_entropy(probs, ad::Tensor<float>::from({n, k}, std::move(y)));
      ad::backward(loss);
      sgd_nesterov_step<float>(slots, opt, lr, config.momentum, config.l2_coeff);

      const double step_loss = loss.item();
      result.history.step_losses.push_back(step_loss);
      loss_sum += step_loss * static_cast<double>(n);
      const auto p = probs.data();
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = p.subspan(i * k, k);
        const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        correct += pred == batch[i]->label;
      }
      seen += n;
      ++steps;
    }
    assert_disjoint(epoch_clips, held_out_clips, "gradient updates");
    audit.gradient_clips.insert(epoch_clips.begin(), epoch_clips.end());

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = seen ? loss_sum / static_cast<double>(seen) : std::numeric_limits<double>::quiet_NaN();
    rec.train_acc = seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
    rec.val_acc = std::numeric_limits<double>::quiet_NaN();
    if (!val_set.empty()) {
      rec.val_acc = eval::accuracy(eval::predict_clips(net, val_set, result.norm));
      if (!have_best || rec.val_acc > result.best_val_acc) {
        have_best = true;
        result.best_val_acc = rec.val_acc;
        result.best_epoch = epoch;
        result.best_model = net.clone();
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }

  result.final_model = std::move(net);
  if (!have_best) {
    result.best_model = result.final_model.clone();
    result.best_epoch = result.history.epochs.empty() ? 0 : result.history.epochs.back().epoch;
    result.best_val_acc = std::numeric_limits<double>::quiet_NaN();
  }
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir);
    model::save_model(*options.output_dir / "ckpt_best", result.best_model, result.norm);
    model::save_model(*options.output_dir / "ckpt_final", result.final_model, result.norm);
    const auto csv = result.history.to_csv();
    std::ofstream(*options.output_dir / "history.csv") << csv;
  }
  return result;
}

}  // namespace acrnn::train
