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

#ifndef SPEAKAUG_NN_GRAPH_H_
#define SPEAKAUG_NN_GRAPH_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "speakaug/common/rng.h"
#include "speakaug/nn/tensor.h"

namespace speakaug::nn {

class Graph;

// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr && id >= 0; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
};

// Reverse-mode tape. Nodes are appended in evaluation order; backward walks
// them in reverse, calling each op's hand-written gradient rule. Parameters
// receive gradients directly in Parameter::grad.
class Graph {
 public:
  using Backward = std::function<void(Graph&)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // One node per Parameter per graph.
  Var param(Parameter& p);

  const Tensor& value(int id) const;
  // Gradient buffer of a node, zero-filled on first access.
  Tensor& grad(int id);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  // Appends an op output. Throws NumericError on non-finite values. The
  // backward rule is dropped when no input needs a gradient.
  Var emit(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
           Backward backward);
  Var emit(std::string_view op, Tensor value, const std::vector<Var>& inputs,
           Backward backward);

  // Seeds d(loss)/d(loss) = 1 for a single-element loss and runs the tape.
  void backward(Var loss);

  bool grad_enabled() const { return grad_enabled_; }

  // Training mode enables dropout, drawing masks from the attached generator.
  void set_training(bool training, Rng* rng = nullptr) {
    training_ = training;
    rng_ = rng;
  }
  bool training() const { return training_; }
  Rng* rng() const { return rng_; }

  // Sign pattern of every piecewise-linear op input (relu, abs) evaluated so
  // far. Two forward passes with different signatures straddle a kink.
  void note_kink(bool positive) { kinks_.push_back(positive ? 1 : 0); }
  const std::vector<uint8_t>& kink_signature() const { return kinks_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    bool needs_grad = false;
    Backward backward;
  };

  Var emit_impl(std::string_view op, Tensor value, const Var* inputs, std::size_t n,
                Backward backward);

  bool grad_enabled_;
  bool training_ = false;
  Rng* rng_ = nullptr;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_ids_;
  std::vector<uint8_t> kinks_;
};

}  // namespace speakaug::nn

#endif  // SPEAKAUG_NN_GRAPH_H_
