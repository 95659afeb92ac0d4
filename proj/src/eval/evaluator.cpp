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

#include "acrnn/evaluator.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "acrnn/checkpoint.hpp"
#include "acrnn/errors.hpp"

namespace acrnn::eval {

namespace {

constexpr std::size_t kInferBatch = 32;

const std::array<model::Placement, 6> kAllPlacements{model::Placement::None, model::Placement::L2,
                                                     model::Placement::L4,   model::Placement::L6,
                                                     model::Placement::L8,   model::Placement::L10};

std::vector<std::vector<double>> segment_probabilities(model::Acrnn<float>& net,
                                                       std::span<const dsp::LogGTSegment* const> segments,
                                                       const dsp::NormStats& norm) {
  ad::NoGradGuard no_grad;
  Rng unused(0);
  std::vector<std::vector<double>> out;
  for (std::size_t begin = 0; begin < segments.size(); begin += kInferBatch) {
    const auto chunk = segments.subspan(begin, std::min(kInferBatch, segments.size() - begin));
    const auto probs = net.forward(train::batch_tensor(chunk, norm), ad::Mode::Infer, unused);
    const std::size_t k = probs.dim(1);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto row = probs.data().subspan(i * k, k);
      out.emplace_back(row.begin(), row.end());
    }
  }
  return out;
}

}  // namespace

std::pair<std::size_t, std::vector<double>> average_and_argmax(const std::vector<std::vector<double>>& segment_probs) {
  if (segment_probs.empty()) throw ContractError("predict_clip: clip has no segments");
  std::vector<double> mean(segment_probs.front().size(), 0.0);
  for (const auto& p : segment_probs) {
    if (p.size() != mean.size()) throw DimensionError("predict_clip: probability vectors differ in length");
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
  }
  for (auto& m : mean) m /= static_cast<double>(segment_probs.size());
  // max_element returns the first maximum, i.e. the lowest class index on ties.
  const auto best = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  return {best, std::move(mean)};
}

std::pair<std::size_t, std::vector<double>> predict_clip(model::Acrnn<float>& net,
                                                         std::span<const dsp::LogGTSegment* const> segments,
                                                         const dsp::NormStats& norm) {
  if (segments.empty()) throw ContractError("predict_clip: clip has no segments");
  return average_and_argmax(segment_probabilities(net, segments, norm));
}

std::vector<ClipPrediction> predict_clips(model::Acrnn<float>& net, std::span<const dsp::LogGTSegment* const> segments,
                                          const dsp::NormStats& norm) {
  std::map<std::string, std::vector<const dsp::LogGTSegment*>> by_clip;
  for (const auto* s : segments) by_clip[s->clip_id].push_back(s);
  const auto probs = segment_probabilities(net, segments, norm);
  std::map<const dsp::LogGTSegment*, std::size_t> row;
  for (std::size_t i = 0; i < segments.size(); ++i) row[segments[i]] = i;

  std::vector<ClipPrediction> out;
  for (const auto& [id, segs] : by_clip) {
    std::vector<std::vector<double>> clip_probs;
    for (const auto* s : segs) clip_probs.push_back(probs[row[s]]);
    auto [cls, mean] = average_and_argmax(clip_probs);
    out.push_back({id, segs.front()->label, static_cast<std::uint32_t>(cls), std::move(mean)});
  }
  return out;
}

double accuracy(const std::vector<ClipPrediction>& predictions) {
  if (predictions.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : predictions) correct += p.truth == p.predicted;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& truths,
                                 std::size_t num_classes) {
  if (predictions.size() != truths.size()) {
    throw ContractError("confusion_matrix: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(truths.size()) + " truths");
  }
  ConfusionMatrix m(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] >= num_classes || predictions[i] >= num_classes) {
      throw ContractError("confusion_matrix: class index out of range at position " + std::to_string(i));
    }
    ++m[truths[i]][predictions[i]];
  }
  return m;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(9) << "fold,clips,accuracy,best_accuracy\n";
  for (const auto& f : folds) {
    out << f.fold << ',' << f.predictions.size() << ',' << f.accuracy << ',' << f.best_accuracy << '\n';
  }
  std::size_t clips = 0;
  for (const auto& f : folds) clips += f.predictions.size();
  out << "mean," << clips << ',' << mean_accuracy << ',' << mean_best_accuracy << '\n';
  return out.str();
}

EvalReport cross_validate(const std::vector<dsp::LogGTSegment>& segments, const model::AcrnnConfig& model_config,
                          const train::TrainConfig& config, const std::vector<std::uint32_t>& folds,
                          const CvOptions& options) {
  if (folds.empty()) throw ContractError("cross_validate: no folds requested");
  std::map<std::uint32_t, std::set<std::string>> clips_by_fold;
  for (const auto& s : segments) clips_by_fold[s.fold].insert(s.clip_id);
  for (std::uint32_t f : folds) {
    if (clips_by_fold[f].empty()) throw ContractError("cross_validate: fold " + std::to_string(f) + " has no clips");
  }

  EvalReport report;
  const std::size_t k = model_config.num_classes;
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::uint32_t f : folds) {
    train::TrainConfig fold_config = config;
    fold_config.seed = config.seed + f;
    train::TrainOptions topts;
    if (options.output_dir) topts.output_dir = *options.output_dir / ("fold" + std::to_string(f));
    if (options.on_epoch) topts.on_epoch = [&, f](const train::EpochRecord& r) { options.on_epoch(f, r); };
    auto trained = train::train(segments, model_config, fold_config, f, topts);

    std::vector<const dsp::LogGTSegment*> test;
    for (const auto& s : segments)
      if (s.fold == f && !s.augmented()) test.push_back(&s);
    const auto& held_out = clips_by_fold[f];
    for (const auto* set : {&trained.audit.gradient_clips, &trained.audit.norm_clips, &trained.audit.augmented_clips}) {
      for (const auto& id : *set) {
        if (held_out.count(id)) throw std::logic_error("leakage: held-out clip '" + id + "' used in training");
      }
    }

    FoldResult fr;
    fr.fold = f;
    fr.predictions = predict_clips(trained.final_model, test, trained.norm);
    fr.accuracy = accuracy(fr.predictions);
    fr.best_accuracy = accuracy(predict_clips(trained.best_model, test, trained.norm));
    std::vector<std::size_t> preds, truths;
    for (const auto& p : fr.predictions) {
      preds.push_back(p.predicted);
      truths.push_back(p.truth);
    }
    fr.confusion = confusion_matrix(preds, truths, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) report.confusion[i][j] += fr.confusion[i][j];
    fr.audit = std::move(trained.audit);
    report.folds.push_back(std::move(fr));
  }
  for (const auto& f : report.folds) {
    report.mean_accuracy += f.accuracy;
    report.mean_best_accuracy += f.best_accuracy;
  }
  report.mean_accuracy /= static_cast<double>(report.folds.size());
  report.mean_best_accuracy /= static_cast<double>(report.folds.size());
  return report;
}

std::string confusion_csv(const ConfusionMatrix& m, const std::vector<std::string>& class_names) {
  if (class_names.size() != m.size()) throw ContractError("confusion_csv: class name count differs from K");
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& n : class_names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << class_names[i];
    for (std::size_t c : m[i]) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

std::string placement_label(model::Placement p) {
  if (p == model::Placement::None) return "no attention";
  return "attention at " + model::placement_name(p);
}

std::vector<AblationRow> ablate_placements(const std::vector<dsp::LogGTSegment>& segments,
                                           const model::AcrnnConfig& model_config, const train::TrainConfig& config,
                                           const std::vector<model::Placement>& placements,
                                           const std::vector<std::uint32_t>& folds, const CvOptions& options) {
  std::vector<AblationRow> rows;
  for (auto p : placements) {
    if (std::find(kAllPlacements.begin(), kAllPlacements.end(), p) == kAllPlacements.end()) {
      throw ContractError("ablate: unknown placement");
    }
    auto mc = model_config;
    mc.placement = p;
    CvOptions o = options;
    if (options.output_dir) o.output_dir = *options.output_dir / model::placement_name(p);
    const auto report = cross_validate(segments, mc, config, folds, o);
    rows.push_back({placement_label(p), report.mean_accuracy, report.mean_best_accuracy});
  }
  return rows;
}

std::vector<AblationRow> ablate_grid(const std::vector<dsp::LogGTSegment>& segments,
                                     const model::AcrnnConfig& model_config, const train::TrainConfig& config,
                                     const std::vector<std::uint32_t>& folds, const CvOptions& options) {
  struct Cell {
    const char* label;
    bool attention;
    bool augment;
  };
  std::vector<AblationRow> rows;
  for (const Cell& c : {Cell{"base", false, false}, Cell{"attention", true, false}, Cell{"augment", false, true},
                        Cell{"attention+augment", true, true}}) {
    auto mc = model_config;
    mc.placement = c.attention ? model::Placement::L10 : model::Placement::None;
    auto tc = config;
    tc.use_augmented_segments = c.augment;
    tc.augmentation.mixup_enabled = c.augment;
    CvOptions o = options;
    if (options.output_dir) o.output_dir = *options.output_dir / c.label;
    const auto report = cross_validate(segments, mc, tc, folds, o);
    rows.push_back({c.label, report.mean_accuracy, report.mean_best_accuracy});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << std::setprecision(9) << "row,accuracy,best_accuracy\n";
  for (const auto& r : rows) out << r.label << ',' << r.accuracy << ',' << r.best_accuracy << '\n';
  return out.str();
}

}  // namespace acrnn::eval
