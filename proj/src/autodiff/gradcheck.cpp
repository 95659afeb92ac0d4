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

#include "acrnn/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <tuple>

#include "acrnn/model.hpp"
#include "acrnn/ops.hpp"
#include "acrnn/random.hpp"

namespace acrnn::gradcheck {

using ad::Mode;
using ad::Padding;
using D = ad::Tensor<double>;

namespace {

D uniform(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool grad = true) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = d(rng);
  return D::from(std::move(shape), std::move(v), grad);
}

// Magnitudes in [0.1, 1] with random sign: keeps relu inputs off the kink.
D off_zero(ad::Shape shape, Rng& rng) {
  std::uniform_real_distribution<double> mag(0.1, 1.0);
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = (rng() & 1) ? mag(rng) : -mag(rng);
  return D::from(std::move(shape), std::move(v), true);
}

// <out, r> for a fixed random r of the output's shape.
struct Projector {
  Rng& rng;
  std::function<D()> operator()(std::function<D()> f) const {
    ad::NoGradGuard guard;
    auto r = uniform(f().shape(), rng, -1.0, 1.0, false);
    return [f = std::move(f), r] { return ad::sum(ad::mul(f(), r)); };
  }
};

struct Case {
  std::string name;
  std::function<D()> loss;
  std::vector<D> params;
};

std::vector<Case> op_cases(Rng& rng) {
  Projector proj{rng};
  std::vector<Case> cases;

  for (auto [label, stride, pad] : {std::tuple{"conv2d same", std::pair<std::size_t, std::size_t>{1, 1}, Padding::Same},
                                    std::tuple{"conv2d same stride 2x1", std::pair<std::size_t, std::size_t>{2, 1}, Padding::Same},
                                    std::tuple{"conv2d valid stride 1x2", std::pair<std::size_t, std::size_t>{1, 2}, Padding::Valid}}) {
    auto x = uniform({2, 5, 6, 2}, rng);
    auto k = uniform({3, 2, 2, 3}, rng);
    auto b = uniform({3}, rng);
    cases.push_back({label, proj([=] { return ad::conv2d(x, k, b, stride, pad); }), {x, k, b}});
  }
  {
    // Distinct, well-separated values so no window has a near tie.
    std::vector<double> v(2 * 8 * 9 * 2);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    std::shuffle(v.begin(), v.end(), rng);
    for (auto& x : v) x *= 0.05;
    auto x = D::from({2, 8, 9, 2}, v, true);
    cases.push_back({"maxpool2d", proj([=] { return ad::maxpool2d(x, 4, 3); }), {x}});
  }
  {
    auto x = uniform({2, 4, 5, 3}, rng);
    cases.push_back({"avgpool_freq", proj([=] { return ad::avgpool_freq(x); }), {x}});
  }
  {
    auto x = uniform({3, 5}, rng);
    auto w = uniform({5, 4}, rng);
    auto b = uniform({4}, rng);
    cases.push_back({"dense", proj([=] { return ad::dense(x, w, b); }), {x, w, b}});
  }
  {
    auto x = uniform({3, 6}, rng, -3.0, 3.0);
    cases.push_back({"softmax", proj([=] { return ad::softmax(x); }), {x}});
  }
  {
    auto x = uniform({2, 4, 3}, rng);
    ad::GruParams<double> f{uniform({3, 6}, rng), uniform({2, 6}, rng), uniform({6}, rng)};
    ad::GruParams<double> b{uniform({3, 6}, rng), uniform({2, 6}, rng), uniform({6}, rng)};
    cases.push_back({"gru_bidirectional", proj([=] { return ad::gru_bidirectional(x, f, b); }),
                     {x, f.input_weights, f.recurrent_weights, f.bias, b.input_weights, b.recurrent_weights, b.bias}});
  }
  for (Mode mode : {Mode::Train, Mode::Infer}) {
    auto x = uniform({3, 4, 2}, rng);
    auto state = ad::BatchNormState<double>::create(2);
    state.gamma = uniform({2}, rng, 0.5, 1.5);
    state.beta = uniform({2}, rng);
    state.running_mean = uniform({2}, rng, -0.5, 0.5, false);
    state.running_var = uniform({2}, rng, 0.5, 2.0, false);
    auto run = [=] {
      auto s = state;
      s.running_mean = state.running_mean.detach_copy();
      s.running_var = state.running_var.detach_copy();
      return ad::batchnorm(x, s, mode);
    };
    cases.push_back({mode == Mode::Train ? "batchnorm train" : "batchnorm infer", proj(run), {x, state.gamma, state.beta}});
  }
  {
    auto x = off_zero({4, 5}, rng);
    cases.push_back({"relu", proj([=] { return ad::relu(x); }), {x}});
    auto y = uniform({4, 5}, rng, -2.0, 2.0);
    cases.push_back({"tanh", proj([=] { return ad::tanh(y); }), {y}});
    cases.push_back({"sigmoid", proj([=] { return ad::sigmoid(y); }), {y}});
  }
  {
    auto x = uniform({30}, rng);
    const std::uint64_t mask_seed = rng();
    cases.push_back({"dropout",
                     proj([=] {
                       Rng mask(mask_seed);
                       return ad::dropout(x, 0.5, Mode::Train, mask);
                     }),
                     {x}});
  }
  {
    auto logits = uniform({3, 4}, rng, -2.0, 2.0);
    auto t = D::from({3, 4}, {0.5, 0.5, 0, 0, 0, 0, 1, 0, 0.2, 0.3, 0.1, 0.4});
    cases.push_back({"cross_entropy", [=] { return ad::cross_entropy(ad::softmax(logits), t); }, {logits}});
  }
  {
    auto a = uniform({3, 4}, rng);
    auto b = uniform({3, 4}, rng);
    cases.push_back({"sum", [=] { return ad::sum(a); }, {a}});
    cases.push_back({"sum_squares", [=] { return ad::sum_squares(a); }, {a}});
    cases.push_back({"add", proj([=] { return ad::add(a, b); }), {a, b}});
    cases.push_back({"mul", proj([=] { return ad::mul(a, b); }), {a, b}});
    cases.push_back({"scale", proj([=] { return ad::scale(a, 1.7); }), {a}});
    cases.push_back({"reshape", proj([=] { return ad::reshape(a, {2, 6}); }), {a}});
  }
  {
    auto m = uniform({2, 3, 4, 2}, rng);
    auto w = uniform({2, 4}, rng);
    auto h = uniform({2, 4, 3}, rng);
    cases.push_back({"to_sequence", proj([=] { return ad::to_sequence(m); }), {m}});
    cases.push_back({"scale_frames", proj([=] { return ad::scale_frames(m, w); }), {m, w}});
    cases.push_back({"weighted_sum_time", proj([=] { return ad::weighted_sum_time(h, w); }), {h, w}});
    cases.push_back({"last_step", proj([=] { return ad::last_step(h); }), {h}});
  }
  {
    auto m = uniform({2, 4, 5, 3}, rng);
    auto k = uniform({3, 3, 3, 1}, rng);
    auto b = uniform({1}, rng);
    cases.push_back({"cnn_attention", proj([=] { return model::cnn_attention(m, k, b); }), {m, k, b}});
  }
  {
    auto h = uniform({2, 5, 4}, rng);
    auto w1 = uniform({4, 3}, rng);
    auto b1 = uniform({3}, rng);
    auto w = uniform({3}, rng);
    cases.push_back({"rnn_attention mlp",
                     proj([=] { return model::rnn_attention(h, model::AttentionForm::Mlp, w1, b1, w); }),
                     {h, w1, b1, w}});
    auto wl = uniform({4}, rng);
    cases.push_back({"rnn_attention linear",
                     proj([=] { return model::rnn_attention(h, model::AttentionForm::Linear, D(), D(), wl); }),
                     {h, wl}});
  }
  {
    auto a = uniform({3, 3}, rng);
    auto b = uniform({4}, rng);
    cases.push_back({"regularization", [=] { return model::regularization_loss<double>({a, b}, 1e-2); }, {a, b}});
  }
  return cases;
}

model::AcrnnConfig reduced(model::Placement placement, model::AttentionForm form) {
  model::AcrnnConfig c;
  c.num_classes = 3;
  c.placement = placement;
  c.rnn_attention_form = form;
  c.channels = {2, 2, 4, 4, 4, 4, 8, 8};
  c.gru_hidden = 6;
  c.input_freq = 32;
  c.input_time = 128;
  c.l2_coeff = 1e-3;
  return c;
}

}  // namespace

double max_relative_error(const std::function<D()>& loss, std::vector<D> params, double step, std::size_t* entries) {
  for (auto& p : params) p.zero_grad();
  ad::backward(loss());
  double worst = 0.0;
  std::size_t count = 0;
  for (auto& p : params) {
    const std::vector<double> analytic =
        p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end()) : std::vector<double>(p.numel(), 0.0);
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      double plus = 0.0, minus = 0.0;
      {
        ad::NoGradGuard guard;
        values[i] = saved + step;
        plus = loss().item();
        values[i] = saved - step;
        minus = loss().item();
      }
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
      ++count;
    }
  }
  if (entries) *entries = count;
  return worst;
}

std::vector<Row> run(const Options& options) {
  std::vector<Row> rows;
  auto record = [&](const std::string& name, const std::function<D()>& loss, const std::vector<D>& params,
                    double step, double threshold) {
    const auto t0 = std::chrono::steady_clock::now();
    Row row;
    row.name = name;
    row.threshold = threshold;
    row.max_rel_error = max_relative_error(loss, params, step, &row.entries);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (options.on_row) options.on_row(row);
    rows.push_back(row);
  };

  if (options.ops) {
    Rng rng(derive_seed(options.seed, 1));
    for (auto& c : op_cases(rng)) record(c.name, c.loss, c.params, options.op_step, options.op_threshold);
  }
  if (options.model) {
    using model::AttentionForm;
    using model::Placement;
    const std::pair<Placement, AttentionForm> variants[] = {
        {Placement::L10, AttentionForm::Mlp}, {Placement::L10, AttentionForm::Linear},
        {Placement::L2, AttentionForm::Mlp},  {Placement::L4, AttentionForm::Mlp},
        {Placement::L6, AttentionForm::Mlp},  {Placement::L8, AttentionForm::Mlp},
        {Placement::None, AttentionForm::Mlp}};
    for (const auto& [placement, form] : variants) {
      const auto cfg = reduced(placement, form);
      auto net = model::Acrnn<double>::build(cfg, derive_seed(options.seed, 2));
      // Scaled-up weights so that no gradient vanishes into the floor.
      for (auto& t : net.weights())
        for (auto& x : t.mutable_data()) x *= 6.0;
      Rng rng(derive_seed(options.seed, 3));
      const auto x = uniform({2, cfg.input_freq, cfg.input_time, 2}, rng, -1.0, 1.0, false);
      const auto y = D::from({2, 3}, {1, 0, 0, 0.2, 0.3, 0.5});
      const std::uint64_t drop_seed = rng();
      auto loss = [&net, x, y, drop_seed] {
        Rng drop(drop_seed);
        return ad::add(ad::cross_entropy(net.forward(x, Mode::Train, drop), y), net.regularization_loss());
      };
      std::string name = "model " + model::placement_name(placement);
      if (placement == Placement::L10) name += " " + model::attention_form_name(form);
      record(name + " 32x128", loss, net.trainable(), options.model_step, options.model_threshold);
    }
  }
  return rows;
}

std::string format_header() {
  return "check                         entries   max rel error   threshold   seconds  result\n";
}

std::string format_row(const Row& r) {
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %8zu   %13.3e   %9.0e   %7.2f  %s\n", r.name.c_str(), r.entries,
                r.max_rel_error, r.threshold, r.seconds, r.passed() ? "ok" : "FAIL");
  return line;
}

std::string format_table(const std::vector<Row>& rows) {
  std::string out = format_header();
  for (const auto& r : rows) out += format_row(r);
  return out;
}

bool all_passed(const std::vector<Row>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.passed(); });
}

}  // namespace acrnn::gradcheck
