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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acrnn/run_config.hpp"

namespace acrnn::cli {

/// A fully resolved command: everything needed to run it again.
struct Invocation {
  std::string command;
  std::vector<std::pair<std::string, std::string>> args;
  config::RunConfig config;

  std::optional<std::string> arg(const std::string& name) const;
  std::string require(const std::string& name) const;
  void set(const std::string& name, std::string value);
};

/// Runs the command and writes <command>.manifest into config.output_dir.
/// Returns the process exit code for a completed run (gradcheck returns 2
/// when a check fails); errors propagate as exceptions.
int dispatch(const Invocation& inv);

/// Rebuilds the invocation recorded in a manifest. With `out_dir`, the run
/// writes there instead, and output paths in the arguments are moved into it.
Invocation from_manifest(const config::Manifest& manifest, const std::optional<std::string>& out_dir);

}  // namespace acrnn::cli
