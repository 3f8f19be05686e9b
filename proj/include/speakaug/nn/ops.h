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

#ifndef SPEAKAUG_NN_OPS_H_
#define SPEAKAUG_NN_OPS_H_

#include <vector>

#include "speakaug/nn/graph.h"

namespace speakaug::nn {

// All matrix ops treat rank-1 tensors as a single row. Shape mismatches throw
// InvalidArgument naming both shapes.

Var matmul(Var a, Var b);                // [n,k] x [k,m]
Var linear(Var x, Var w, Var b);         // x.w + b, b broadcast over rows
Var add(Var a, Var b);                   // same shape
Var sub(Var a, Var b);
Var mul(Var a, Var b);                   // elementwise
Var add_row(Var a, Var row);             // [n,m] + [m]
Var scale(Var a, double s);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var softplus(Var a);
Var dropout(Var a, double p);            // identity unless the graph is training

Var concat_cols(const std::vector<Var>& parts);  // same row count
Var slice_cols(Var a, int begin, int len);
Var row(Var a, int r);                            // -> [1, m]
Var stack_rows(const std::vector<Var>& rows);     // each [1, m] -> [n, m]
Var broadcast_rows(Var row, int n);               // [1, m] -> [n, m]
Var reshape(Var a, Shape shape);
Var gather_rows(Var table, const std::vector<int>& ids);

Var softmax_rows(Var a);

// Same-padded cross-correlation over time. x [T, C_in], kernels
// [k, C_in, C_out], bias [C_out] or invalid Var. k must be odd.
Var conv1d(Var x, Var kernels, Var bias);

// Gated recurrent update (reset/update/candidate gate order).
// x [n, in], h [n, H], wx [in, 3H], wh [H, 3H], bx [3H], bh [3H].
Var gru_step(Var x, Var h, Var wx, Var wh, Var bx, Var bh);

Var sum(Var a);
Var mean(Var a);
Var l1_loss(Var a, Var b);                        // mean |a - b|
Var bce_with_logits(Var logits, const Tensor& targets);
Var cross_entropy(Var logits, const std::vector<int>& labels);  // mean over rows

}  // namespace speakaug::nn

#endif  // SPEAKAUG_NN_OPS_H_
