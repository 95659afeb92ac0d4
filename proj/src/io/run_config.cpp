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

#include "acrnn/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <limits>
#include <sstream>

#include <boost/program_options.hpp>

#include "acrnn/binary_io.hpp"
#include "acrnn/checkpoint.hpp"
#include "acrnn/errors.hpp"

namespace po = boost::program_options;

namespace acrnn::config {

namespace {

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

template <typename T>
std::string join(const T& values) {
  std::string out;
  for (const auto& v : values) out += (out.empty() ? "" : ",") + std::to_string(v);
  return out;
}

std::vector<std::size_t> split_counts(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size() || item.empty()) {
      throw ContractError("config: '" + key + "' expects comma-separated integers, got '" + text + "'");
    }
    out.push_back(v);
  }
  return out;
}

po::options_description describe() {
  po::options_description d;
  // clang-format off
  d.add_options()
      ("data.meta", po::value<std::string>())
      ("data.dir", po::value<std::string>())
      ("data.variant", po::value<std::string>())
      ("data.augment", po::value<bool>())
      ("train.batch_size", po::value<std::size_t>())
      ("train.epochs", po::value<std::size_t>())
      ("train.lr0", po::value<double>())
      ("train.lr_decay_factor", po::value<double>())
      ("train.lr_decay_every", po::value<std::size_t>())
      ("train.momentum", po::value<double>())
      ("train.l2_coeff", po::value<double>())
      ("train.use_augmented", po::value<bool>())
      ("augment.stretch_min", po::value<double>())
      ("augment.stretch_max", po::value<double>())
      ("augment.shift_min", po::value<double>())
      ("augment.shift_max", po::value<double>())
      ("augment.copies_per_clip", po::value<std::size_t>())
      ("augment.mixup_alpha", po::value<double>())
      ("augment.mixup_enabled", po::value<bool>())
      ("model.num_classes", po::value<std::size_t>())
      ("model.attention_placement", po::value<std::string>())
      ("model.rnn_attention_form", po::value<std::string>())
      ("model.channels", po::value<std::string>())
      ("model.gru_hidden", po::value<std::size_t>())
      ("model.dropout_p", po::value<double>())
      ("model.init_std", po::value<double>())
      ("run.seed", po::value<std::uint64_t>())
      ("run.output_dir", po::value<std::string>())
      ("run.folds", po::value<std::string>());
  // clang-format on
  return d;
}

}  // namespace

void RunConfig::apply_seed() {
  train.seed = seed;
  train.augmentation.rng_seed = seed;
}

std::size_t RunConfig::resolve_classes(const std::vector<dsp::LogGTSegment>& segments) const {
  if (model.num_classes != 0) return model.num_classes;
  std::size_t k = 0;
  for (const auto& s : segments) k = std::max<std::size_t>(k, s.label + 1);
  if (k < 2) throw ContractError("cannot infer the class count: the cache holds fewer than two labels");
  return k;
}

RunConfig apply_overrides(const RunConfig& base, const std::vector<std::pair<std::string, std::string>>& overrides) {
  auto entries = run_config_entries(base);
  for (const auto& [key, value] : overrides) {
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.first == key; });
    if (it == entries.end()) throw ContractError("config: unknown key '" + key + "'");
    it->second = value;
  }
  std::string text;
  for (const auto& [k, v] : entries) text += k + " = " + v + "\n";
  return parse_run_config(text);
}

RunConfig parse_run_config(std::string_view text) {
  po::variables_map vm;
  try {
    std::istringstream in{std::string(text)};
    po::store(po::parse_config_file(in, describe(), false), vm);
  } catch (const po::error& e) {
    throw ContractError(std::string("config: ") + e.what());
  }

  RunConfig c;
  c.model.num_classes = 0;
  auto get = [&](const char* key, auto& field) {
    if (vm.count(key)) field = vm[key].as<std::remove_reference_t<decltype(field)>>();
  };
  get("data.meta", c.meta_path);
  get("data.dir", c.data_dir);
  if (vm.count("data.variant")) c.variant = data::parse_variant(vm["data.variant"].as<std::string>());
  get("data.augment", c.extract_augment);
  get("train.batch_size", c.train.batch_size);
  get("train.epochs", c.train.epochs);
  get("train.lr0", c.train.lr0);
  get("train.lr_decay_factor", c.train.lr_decay_factor);
  get("train.lr_decay_every", c.train.lr_decay_every);
  get("train.momentum", c.train.momentum);
  get("train.l2_coeff", c.train.l2_coeff);
  get("train.use_augmented", c.train.use_augmented_segments);
  auto& a = c.train.augmentation;
  get("augment.stretch_min", a.stretch_min);
  get("augment.stretch_max", a.stretch_max);
  get("augment.shift_min", a.shift_min);
  get("augment.shift_max", a.shift_max);
  get("augment.copies_per_clip", a.copies_per_clip);
  get("augment.mixup_alpha", a.mixup_alpha);
  get("augment.mixup_enabled", a.mixup_enabled);
  get("model.num_classes", c.model.num_classes);
  if (vm.count("model.attention_placement")) {
    c.model.placement = model::parse_placement(vm["model.attention_placement"].as<std::string>());
  }
  if (vm.count("model.rnn_attention_form")) {
    c.model.rnn_attention_form = model::parse_attention_form(vm["model.rnn_attention_form"].as<std::string>());
  }
  if (vm.count("model.channels")) {
    const auto ch = split_counts(vm["model.channels"].as<std::string>(), "model.channels");
    if (ch.size() != 8) throw ContractError("config: model.channels needs 8 widths");
    std::copy(ch.begin(), ch.end(), c.model.channels.begin());
  }
  get("model.gru_hidden", c.model.gru_hidden);
  get("model.dropout_p", c.model.dropout_p);
  get("model.init_std", c.model.init_std);
  get("run.seed", c.seed);
  get("run.output_dir", c.output_dir);
  if (vm.count("run.folds")) {
    c.folds.clear();
    for (auto f : split_counts(vm["run.folds"].as<std::string>(), "run.folds")) {
      if (f < 1 || f > 5) throw ContractError("config: run.folds entries must be in 1-5");
      c.folds.push_back(static_cast<std::uint32_t>(f));
    }
    if (c.folds.empty()) throw ContractError("config: run.folds is empty");
  }
  c.model.l2_coeff = c.train.l2_coeff;
  c.apply_seed();
  c.train.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(io::read_file(path)); }

std::vector<std::pair<std::string, std::string>> run_config_entries(const RunConfig& c) {
  const auto& t = c.train;
  const auto& a = t.augmentation;
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"data.meta", c.meta_path},
      {"data.dir", c.data_dir},
      {"data.variant", data::variant_name(c.variant)},
      {"data.augment", b(c.extract_augment)},
      {"train.batch_size", std::to_string(t.batch_size)},
      {"train.epochs", std::to_string(t.epochs)},
      {"train.lr0", format_double(t.lr0)},
      {"train.lr_decay_factor", format_double(t.lr_decay_factor)},
      {"train.lr_decay_every", std::to_string(t.lr_decay_every)},
      {"train.momentum", format_double(t.momentum)},
      {"train.l2_coeff", format_double(t.l2_coeff)},
      {"train.use_augmented", b(t.use_augmented_segments)},
      {"augment.stretch_min", format_double(a.stretch_min)},
      {"augment.stretch_max", format_double(a.stretch_max)},
      {"augment.shift_min", format_double(a.shift_min)},
      {"augment.shift_max", format_double(a.shift_max)},
      {"augment.copies_per_clip", std::to_string(a.copies_per_clip)},
      {"augment.mixup_alpha", format_double(a.mixup_alpha)},
      {"augment.mixup_enabled", b(a.mixup_enabled)},
      {"model.num_classes", std::to_string(c.model.num_classes)},
      {"model.attention_placement", model::placement_name(c.model.placement)},
      {"model.rnn_attention_form", model::attention_form_name(c.model.rnn_attention_form)},
      {"model.channels", join(c.model.channels)},
      {"model.gru_hidden", std::to_string(c.model.gru_hidden)},
      {"model.dropout_p", format_double(c.model.dropout_p)},
      {"model.init_std", format_double(c.model.init_std)},
      {"run.seed", std::to_string(c.seed)},
      {"run.output_dir", c.output_dir},
      {"run.folds", join(c.folds)},
  };
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : run_config_entries(config)) out += k + " = " + v + "\n";
  return out;
}

std::string format_manifest(const Manifest& m) {
  std::string out = "command = " + m.command + "\n";
  out += "manifest_version = " + std::to_string(kManifestVersion) + "\n";
  out += "format.cache = LGT1 v" + std::to_string(data::kCacheVersion) + "\n";
  out += "format.checkpoint = ACRN v" + std::to_string(model::kCheckpointVersion) + "\n";
  out += "seed = " + std::to_string(m.config.seed) + "\n";
  for (const auto& [k, v] : m.args) out += "arg." + k + " = " + v + "\n";
  for (const auto& [k, v] : run_config_entries(m.config)) out += "config." + k + " = " + v + "\n";
  return out;
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::string config_text;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ParseError("manifest line is not 'key = value'", line_no);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    if (key == "command") {
      m.command = value;
    } else if (key == "manifest_version") {
      if (value != std::to_string(kManifestVersion)) throw ParseError("unsupported manifest version " + value, line_no);
    } else if (key.rfind("arg.", 0) == 0) {
      m.args.emplace_back(key.substr(4), value);
    } else if (key.rfind("config.", 0) == 0) {
      config_text += key.substr(7) + " = " + value + "\n";
    } else if (key != "seed" && key.rfind("format.", 0) != 0) {
      throw ParseError("unknown manifest key '" + key + "'", line_no);
    }
  }
  if (m.command.empty()) throw ParseError("manifest has no command", line_no);
  m.config = parse_run_config(config_text);
  return m;
}

std::filesystem::path write_manifest(const std::filesystem::path& dir, const Manifest& manifest) {
  std::filesystem::create_directories(dir);
  const auto path = dir / (manifest.command + ".manifest");
  io::write_file_atomic(path, format_manifest(manifest));
  return path;
}

}  // namespace acrnn::config
