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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "acrnn/tensor.hpp"

namespace acrnn::gradcheck {

struct Row {
  std::string name;
  std::size_t entries = 0;  // scalar parameters perturbed
  double max_rel_error = 0.0;
  double threshold = 0.0;
  double seconds = 0.0;
  bool passed() const { return max_rel_error <= threshold; }
};

struct Options {
  std::uint64_t seed = 0;
  bool ops = true;
  bool model = true;
  double op_step = 1e-4;
  double op_threshold = 1e-4;
  double model_step = 1e-6;
  double model_threshold = 1e-3;
  std::function<void(const Row&)> on_row;
};

/// Central differences (f(x+h) - f(x-h)) / 2h against backward() for every
/// entry of every tensor in `params`. Relative error uses a floor of 1e-3 on
/// the denominator.
double max_relative_error(const std::function<ad::Tensor<double>()>& loss, std::vector<ad::Tensor<double>> params,
                          double step, std::size_t* entries = nullptr);

/// Every autodiff op, then the reduced-width network at each attention placement.
std::vector<Row> run(const Options& options);

std::string format_header();
std::string format_row(const Row& row);
std::string format_table(const std::vector<Row>& rows);
bool all_passed(const std::vector<Row>& rows);

}  // namespace acrnn::gradcheck
