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

#include "acrnn/tensor.hpp"

#include <unordered_set>
#include <utility>

namespace acrnn::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

template <typename T>
BackwardStats backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  TensorImpl<T>* root = loss.impl().get();
  if (!root->requires_grad) throw ContractError("backward() on a loss that depends on no differentiable tensor");

  // Iterative post-order DFS; `order` ends up with inputs before consumers.
  std::vector<TensorImpl<T>*> order;
  std::unordered_set<TensorImpl<T>*> seen;
  std::vector<std::pair<TensorImpl<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const std::size_t n_inputs = t->grad_fn ? t->grad_fn->inputs.size() : 0;
    if (next < n_inputs) {
      TensorImpl<T>* child = t->grad_fn->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(t);
      stack.pop_back();
    }
  }

  for (TensorImpl<T>* t : order) {
    if (t->grad_fn) t->grad.assign(t->data.size(), T(0));
  }
  root->grad_buffer()[0] += T(1);

  BackwardStats stats;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl<T>* t = *it;
    if (!t->grad_fn) continue;
    t->grad_fn->backward(*t);
    ++stats.nodes_visited;
  }
  return stats;
}

template BackwardStats backward<float>(const Tensor<float>&);
template BackwardStats backward<double>(const Tensor<double>&);

}  // namespace acrnn::ad
