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

// Command-line front end: extract, train, eval, cv, ablate, gradcheck, replay.

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "acrnn/binary_io.hpp"
#include "acrnn/errors.hpp"
#include "acrnn/run_config.hpp"
#include "commands.hpp"

using namespace acrnn;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> sets;
  bool quiet = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "run configuration file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "run seed (run.seed)");
  cmd->add_option("--out-dir", c.out_dir, "output directory for results and the manifest (run.output_dir)");
  cmd->add_option("--set", c.sets, "override one config key, e.g. --set train.epochs=20")->take_all();
  cmd->add_flag("-q,--quiet", c.quiet, "only warnings and errors");
  cmd->add_flag("-v,--verbose", c.verbose, "debug logging");
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ContractError("--set expects key=value, got '" + text + "'");
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    return s;
  };
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("acrnn");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

  CLI::App app{"Attention-based convolutional recurrent network for environmental sound classification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  Common common;
  std::map<std::string, std::string> args;  // command-specific flags, by name
  std::map<std::string, std::string> config_flags;
  std::string manifest_path, replay_out;
  bool no_augment = false, ops_only = false;

  auto* extract = app.add_subcommand("extract", "decode audio, extract Log-GT segments and write a feature cache");
  extract->add_option("--meta", config_flags["data.meta"], "metadata CSV")->check(CLI::ExistingFile);
  extract->add_option("--data-dir", config_flags["data.dir"], "directory holding the audio files")
      ->check(CLI::ExistingDirectory);
  extract->add_option("--variant", config_flags["data.variant"], "esc10, esc50 or custom");
  extract->add_option("--out", args["out"], "cache file to write")->required();
  extract->add_flag("--no-augment", no_augment, "original audio only, no stretched/shifted copies");

  auto* train = app.add_subcommand("train", "train one model, optionally holding out a fold for validation");
  train->add_option("--cache", args["cache"], "feature cache")->required()->check(CLI::ExistingFile);
  train->add_option("--fold", args["fold"], "held-out validation fold, 0 for none");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one fold");
  eval->add_option("--checkpoint", args["checkpoint"], "model checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--cache", args["cache"], "feature cache")->required()->check(CLI::ExistingFile);
  eval->add_option("--fold", args["fold"], "fold to evaluate (1-5)")->required();
  eval->add_option("--report", args["report"], "report CSV (default <out-dir>/eval_report.csv)");

  auto* cv = app.add_subcommand("cv", "cross-validate over the configured folds");
  cv->add_option("--cache", args["cache"], "feature cache")->required()->check(CLI::ExistingFile);
  cv->add_option("--report", args["report"], "report CSV (default <out-dir>/cv_report.csv)");

  auto* ablate = app.add_subcommand("ablate", "attention placement and attention/augmentation ablations");
  ablate->add_option("--cache", args["cache"], "feature cache")->required()->check(CLI::ExistingFile);
  ablate->add_option("--kind", args["kind"], "placement, grid or both")->default_str("both");
  ablate->add_option("--report", args["report"], "report CSV (default <out-dir>/ablation.csv)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every op and the reduced network");
  gradcheck->add_flag("--ops-only", ops_only, "skip the full-network checks");

  auto* replay = app.add_subcommand("replay", "rerun the command recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest file")->required()->check(CLI::ExistingFile);
  replay->add_option("--out-dir", replay_out, "write outputs here instead of the recorded directory");

  for (auto* cmd : {extract, train, eval, cv, ablate, gradcheck}) add_common(cmd, common);
  replay->add_flag("-q,--quiet", common.quiet, "only warnings and errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }
  spdlog::set_level(common.quiet ? spdlog::level::warn : common.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    cli::Invocation inv;
    if (replay->parsed()) {
      const auto manifest = config::parse_manifest(io::read_file(manifest_path));
      inv = cli::from_manifest(manifest, replay_out.empty() ? std::nullopt : std::optional(replay_out));
      spdlog::info("replaying '{}' from {}", inv.command, manifest_path);
      config::write_manifest(inv.config.output_dir, {"replay", {{"manifest", manifest_path}}, inv.config});
    } else {
      inv.command = app.get_subcommands().front()->get_name();
      const auto base = common.config_path.empty() ? config::parse_run_config("")
                                                   : config::load_run_config(common.config_path);
      std::vector<std::pair<std::string, std::string>> overrides;
      for (const auto& s : common.sets) overrides.push_back(split_assignment(s));
      for (const auto& [key, value] : config_flags)
        if (!value.empty()) overrides.emplace_back(key, value);
      if (no_augment) overrides.emplace_back("data.augment", "false");
      if (common.seed) overrides.emplace_back("run.seed", std::to_string(*common.seed));
      if (!common.out_dir.empty()) overrides.emplace_back("run.output_dir", common.out_dir);
      inv.config = config::apply_overrides(base, overrides);
      for (const auto& [name, value] : args)
        if (!value.empty()) inv.args.emplace_back(name, value);
      if (ops_only) inv.args.emplace_back("ops-only", "true");
    }
    return cli::dispatch(inv);
  } catch (const std::invalid_argument& e) {  // contract, dimension and too-short errors
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  }
}
