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

#ifndef SPEAKAUG_NN_ATTENTION_H_
#define SPEAKAUG_NN_ATTENTION_H_

#include "speakaug/nn/graph.h"

namespace speakaug::nn {

// Parameters of hybrid content + location attention.
struct AttentionParams {
  Var query_w;      // [q, A]
  Var loc_filters;  // [k, 1, F], or [k, 2, F] with cumulative weights
  Var loc_w;        // [F, A]
  Var bias;         // [A]
  Var v;            // [A, 1]
};

// e_t = v . tanh(query.Wq + keys_t + conv(loc)_t.Wloc + b).
// query [1, q], keys [T, A] (already projected memory), prev_weights [1, T].
// The location input is the previous weights, plus the cumulative weights as a
// second channel when given. Returns the energies [1, T]; alignment weights
// are softmax_rows of them.
Var attention_energies(const AttentionParams& p, Var query, Var keys, Var prev_weights,
                       Var cumulative = Var{});
Var attention_weights(const AttentionParams& p, Var query, Var keys, Var prev_weights,
                      Var cumulative = Var{});

}  // namespace speakaug::nn

#endif  // SPEAKAUG_NN_ATTENTION_H_
