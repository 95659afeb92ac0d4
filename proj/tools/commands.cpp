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

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <spdlog/spdlog.h>

#include "acrnn/binary_io.hpp"
#include "acrnn/checkpoint.hpp"
#include "acrnn/dataset.hpp"
#include "acrnn/errors.hpp"
#include "acrnn/evaluator.hpp"
#include "acrnn/gradcheck.hpp"
#include "acrnn/trainer.hpp"

namespace fs = std::filesystem;

namespace acrnn::cli {

namespace {

// Arguments naming files the command writes.
const char* const kOutputArgs[] = {"out", "report"};

fs::path out_dir(const Invocation& inv) { return inv.config.output_dir; }

fs::path output_path(const Invocation& inv, const std::string& name, const std::string& fallback) {
  const auto given = inv.arg(name);
  return given ? fs::path(*given) : out_dir(inv) / fallback;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_file_atomic(path, text);
  spdlog::info("wrote {}", path.string());
}

std::uint32_t parse_fold(const std::string& text, bool allow_zero) {
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || v > 5 || (!allow_zero && v == 0)) {
    throw ContractError("--fold must be " + std::string(allow_zero ? "0-5" : "1-5") + ", got '" + text + "'");
  }
  return static_cast<std::uint32_t>(v);
}

std::vector<dsp::LogGTSegment> load_segments(const Invocation& inv) {
  const fs::path cache = inv.require("cache");
  if (!fs::exists(cache)) throw ContractError("cache file '" + cache.string() + "' does not exist");
  auto segs = data::read_cache(cache);
  const auto& folds = inv.config.folds;
  std::erase_if(segs, [&](const dsp::LogGTSegment& s) {
    return std::find(folds.begin(), folds.end(), s.fold) == folds.end();
  });
  if (segs.empty()) throw ContractError("cache '" + cache.string() + "' has no segments in the configured folds");
  spdlog::info("loaded {} segments from {}", segs.size(), cache.string());
  return segs;
}

model::AcrnnConfig model_config(const Invocation& inv, const std::vector<dsp::LogGTSegment>& segs) {
  auto m = inv.config.model;
  m.num_classes = inv.config.resolve_classes(segs);
  m.l2_coeff = inv.config.train.l2_coeff;
  m.validate();
  return m;
}

void log_epoch(const train::EpochRecord& e) {
  spdlog::info("epoch {:>4}  lr {:.4g}  loss {:.4f}  train acc {:.3f}  val acc {:.3f}  ({:.1f}s)", e.epoch, e.lr,
               e.train_loss, e.train_acc, e.val_acc, e.seconds);
}

std::vector<std::string> class_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back(std::to_string(i));
  return names;
}

int run_extract(const Invocation& inv) {
  const auto& c = inv.config;
  if (c.meta_path.empty()) throw ContractError("extract needs --meta (or data.meta in the config)");
  const auto meta = data::load_metadata(c.meta_path, c.variant);
  spdlog::info("{} clips, {} classes ({})", meta.records.size(), meta.num_classes, data::variant_name(c.variant));
  data::ExtractOptions opts;
  opts.augment = c.extract_augment;
  opts.augment_config = c.train.augmentation;
  std::size_t next_report = 0;
  opts.progress = [&](std::size_t done, std::size_t total) {
    if (done * 10 >= next_report * total) {
      spdlog::info("extracted {}/{} clips", done, total);
      next_report = done * 10 / total + 1;
    }
  };
  const fs::path out = inv.require("out");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const auto segs = data::build_segments(meta, c.data_dir.empty() ? fs::path(".") : fs::path(c.data_dir), opts);
  data::write_cache(out, segs);
  const auto augmented = std::count_if(segs.begin(), segs.end(), [](const auto& s) { return s.augmented(); });
  spdlog::info("wrote {} segments ({} augmented) to {}", segs.size(), augmented, out.string());
  return 0;
}

int run_train(const Invocation& inv) {
  const auto segs = load_segments(inv);
  const std::uint32_t fold = parse_fold(inv.arg("fold").value_or("0"), true);
  if (fold != 0 && std::find(inv.config.folds.begin(), inv.config.folds.end(), fold) == inv.config.folds.end()) {
    throw ContractError("held-out fold " + std::to_string(fold) + " is not among run.folds");
  }
  train::TrainOptions opts;
  opts.output_dir = out_dir(inv);
  opts.on_epoch = log_epoch;
  const auto result = train::train(segs, model_config(inv, segs), inv.config.train, fold, opts);
  const auto& last = result.history.epochs.back();
  std::printf("final epoch %zu: loss %.4f, train acc %.4f", last.epoch, last.train_loss, last.train_acc);
  if (fold != 0) std::printf(", val acc %.4f (best %.4f at epoch %zu)", last.val_acc, result.best_val_acc, result.best_epoch);
  std::printf("\n");
  return 0;
}

int run_eval(const Invocation& inv) {
  const auto saved = model::load_model(inv.require("checkpoint"));
  if (!saved.norm) throw ContractError("checkpoint has no normalization statistics");
  const std::uint32_t fold = parse_fold(inv.require("fold"), false);
  const auto all = data::read_cache(inv.require("cache"));
  std::vector<const dsp::LogGTSegment*> segs;
  for (const auto& s : all)
    if (s.fold == fold && !s.augmented()) segs.push_back(&s);
  if (segs.empty()) throw ContractError("cache has no original segments in fold " + std::to_string(fold));

  auto net = saved.model.clone();
  const std::size_t k = net.config().num_classes;
  eval::FoldResult fr;
  fr.fold = fold;
  fr.predictions = eval::predict_clips(net, segs, *saved.norm);
  fr.accuracy = fr.best_accuracy = eval::accuracy(fr.predictions);
  std::vector<std::size_t> pred, truth;
  for (const auto& p : fr.predictions) {
    pred.push_back(p.predicted);
    truth.push_back(p.truth);
  }
  fr.confusion = eval::confusion_matrix(pred, truth, k);
  eval::EvalReport report;
  report.confusion = fr.confusion;
  report.mean_accuracy = report.mean_best_accuracy = fr.accuracy;
  report.folds.push_back(std::move(fr));

  write_text(output_path(inv, "report", "eval_report.csv"), report.to_csv());
  write_text(out_dir(inv) / "eval_confusion.csv", eval::confusion_csv(report.confusion, class_names(k)));
  std::printf("fold %u: %zu clips, accuracy %.4f\n", fold, report.folds[0].predictions.size(), report.mean_accuracy);
  return 0;
}

int run_cv(const Invocation& inv) {
  const auto segs = load_segments(inv);
  const auto m = model_config(inv, segs);
  eval::CvOptions opts;
  opts.output_dir = out_dir(inv);
  opts.on_epoch = [](std::uint32_t fold, const train::EpochRecord& e) {
    spdlog::info("fold {}: epoch {} loss {:.4f} val acc {:.3f}", fold, e.epoch, e.train_loss, e.val_acc);
  };
  const auto report = eval::cross_validate(segs, m, inv.config.train, inv.config.folds, opts);
  write_text(output_path(inv, "report", "cv_report.csv"), report.to_csv());
  write_text(out_dir(inv) / "cv_confusion.csv", eval::confusion_csv(report.confusion, class_names(m.num_classes)));
  for (const auto& f : report.folds) std::printf("fold %u: accuracy %.4f (best %.4f)\n", f.fold, f.accuracy, f.best_accuracy);
  std::printf("mean accuracy %.4f (best-epoch %.4f)\n", report.mean_accuracy, report.mean_best_accuracy);
  return 0;
}

int run_ablate(const Invocation& inv) {
  const std::string kind = inv.arg("kind").value_or("both");
  if (kind != "placement" && kind != "grid" && kind != "both") {
    throw ContractError("--kind must be placement, grid or both, got '" + kind + "'");
  }
  const auto segs = load_segments(inv);
  const auto m = model_config(inv, segs);
  eval::CvOptions opts;
  opts.output_dir = out_dir(inv);
  std::vector<eval::AblationRow> rows;
  if (kind != "grid") {
    using model::Placement;
    const auto r = eval::ablate_placements(
        segs, m, inv.config.train,
        {Placement::None, Placement::L2, Placement::L4, Placement::L6, Placement::L8, Placement::L10},
        inv.config.folds, opts);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (kind != "placement") {
    const auto r = eval::ablate_grid(segs, m, inv.config.train, inv.config.folds, opts);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  write_text(output_path(inv, "report", "ablation.csv"), eval::ablation_csv(rows));
  for (const auto& r : rows) std::printf("%-20s %.4f (best %.4f)\n", r.label.c_str(), r.accuracy, r.best_accuracy);
  return 0;
}

int run_gradcheck(const Invocation& inv) {
  gradcheck::Options opts;
  opts.seed = inv.config.seed;
  opts.model = inv.arg("ops-only").value_or("false") != "true";
  std::fputs(gradcheck::format_header().c_str(), stdout);
  opts.on_row = [](const gradcheck::Row& r) {
    std::fputs(gradcheck::format_row(r).c_str(), stdout);
    std::fflush(stdout);
  };
  const auto rows = gradcheck::run(opts);
  write_text(out_dir(inv) / "gradcheck.txt", gradcheck::format_table(rows));
  const bool ok = gradcheck::all_passed(rows);
  std::printf("%s\n", ok ? "all gradient checks passed" : "gradient check FAILED");
  return ok ? 0 : 2;
}

}  // namespace

std::optional<std::string> Invocation::arg(const std::string& name) const {
  for (const auto& [k, v] : args)
    if (k == name) return v;
  return std::nullopt;
}

std::string Invocation::require(const std::string& name) const {
  auto v = arg(name);
  if (!v || v->empty()) throw ContractError(command + " needs --" + name);
  return *v;
}

void Invocation::set(const std::string& name, std::string value) {
  for (auto& [k, v] : args)
    if (k == name) {
      v = std::move(value);
      return;
    }
  args.emplace_back(name, std::move(value));
}

int dispatch(const Invocation& inv) {
  using Runner = int (*)(const Invocation&);
  const std::pair<const char*, Runner> table[] = {{"extract", run_extract}, {"train", run_train},
                                                  {"eval", run_eval},       {"cv", run_cv},
                                                  {"ablate", run_ablate},   {"gradcheck", run_gradcheck}};
  const auto it = std::find_if(std::begin(table), std::end(table), [&](const auto& e) { return inv.command == e.first; });
  if (it == std::end(table)) throw ContractError("unknown command '" + inv.command + "'");
  fs::create_directories(out_dir(inv));
  const auto manifest = config::write_manifest(out_dir(inv), {inv.command, inv.args, inv.config});
  spdlog::info("manifest {}", manifest.string());
  return it->second(inv);
}

Invocation from_manifest(const config::Manifest& manifest, const std::optional<std::string>& dir) {
  Invocation inv{manifest.command, manifest.args, manifest.config};
  if (dir) {
    inv.config.output_dir = *dir;
    for (const char* name : kOutputArgs)
      if (auto v = inv.arg(name)) inv.set(name, (fs::path(*dir) / fs::path(*v).filename()).string());
  }
  return inv;
}

}  // namespace acrnn::cli
