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

#include "speakaug/nn/attention.h"

#include "speakaug/common/error.h"
#include "speakaug/nn/ops.h"

namespace speakaug::nn {

Var attention_energies(const AttentionParams& p, Var query, Var keys, Var prev_weights, Var cumulative) {
  const int T = keys.value().rank() == 2 ? keys.value().rows() : 0;
  if (T == 0 || keys.value().empty()) throw InvalidArgument("attention over an empty memory");
  if (static_cast<int>(prev_weights.value().size()) != T) {
    throw InvalidArgument("attention: previous weights " + shape_string(prev_weights.shape()) +
                          " for memory " + shape_string(keys.shape()));
  }
  Var loc_in = reshape(prev_weights, {T, 1});
  if (cumulative.valid()) {
    if (static_cast<int>(cumulative.value().size()) != T) {
      throw InvalidArgument("attention: cumulative weights " + shape_string(cumulative.shape()) +
                            " for memory " + shape_string(keys.shape()));
    }
    loc_in = concat_cols({loc_in, reshape(cumulative, {T, 1})});
  }
  Var q = matmul(query, p.query_w);
  Var loc = conv1d(loc_in, p.loc_filters, Var{});
  Var pre = add(add(keys, broadcast_rows(q, T)), matmul(loc, p.loc_w));
  Var e = matmul(tanh(add_row(pre, p.bias)), p.v);
  return reshape(e, {1, T});
}

Var attention_weights(const AttentionParams& p, Var query, Var keys, Var prev_weights, Var cumulative) {
  return softmax_rows(attention_energies(p, query, keys, prev_weights, cumulative));
}

}  // namespace speakaug::nn
