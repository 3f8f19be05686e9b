// Copyright 2026 The speakaug Authors
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

#include "speakaug/nn/graph.h"

#include <cmath>
#include <string>

#include "speakaug/common/error.h"

namespace speakaug::nn {

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::constant(Tensor value) {
  return emit_impl("constant", std::move(value), nullptr, 0, nullptr);
}

Var Graph::param(Parameter& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var{this, it->second};
  Node node;
  node.param = &p;
  node.needs_grad = grad_enabled_;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_.emplace(&p, id);
  return Var{this, id};
}

const Tensor& Graph::value(int id) const {
  const Node& n = nodes_[id];
  return n.param ? n.param->value : n.value;
}

Tensor& Graph::grad(int id) {
  Node& n = nodes_[id];
  Tensor& g = n.param ? n.param->grad : n.grad;
  const Tensor& v = value(id);
  if (g.shape != v.shape) g = Tensor(v.shape);
  return g;
}

Var Graph::emit(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
                Backward backward) {
  return emit_impl(op, std::move(value), inputs.begin(), inputs.size(), std::move(backward));
}

Var Graph::emit(std::string_view op, Tensor value, const std::vector<Var>& inputs,
                Backward backward) {
  return emit_impl(op, std::move(value), inputs.data(), inputs.size(), std::move(backward));
}

Var Graph::emit_impl(std::string_view op, Tensor value, const Var* inputs, std::size_t n,
                     Backward backward) {
  for (double v : value.values) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value produced by " + std::string(op));
    }
  }
  bool needs = false;
  if (grad_enabled_) {
    for (std::size_t i = 0; i < n; ++i) {
      if (inputs[i].graph != this) {
        throw InvalidArgument(std::string(op) + ": input from a different graph");
      }
      needs = needs || nodes_[inputs[i].id].needs_grad;
    }
  }
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::backward(Var loss) {
  if (!grad_enabled_) throw InvalidArgument("backward on a graph without gradients");
  if (loss.graph != this) throw InvalidArgument("backward: loss from another graph");
  if (value(loss.id).size() != 1) {
    throw InvalidArgument("backward expects a single-element loss, got shape " +
                          shape_string(value(loss.id).shape));
  }
  grad(loss.id).values[0] += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this);
  }
}

}  // namespace speakaug::nn
