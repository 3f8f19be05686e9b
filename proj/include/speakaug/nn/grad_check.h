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

#ifndef SPEAKAUG_NN_GRAD_CHECK_H_
#define SPEAKAUG_NN_GRAD_CHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "speakaug/nn/graph.h"

namespace speakaug::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // central difference straddled a relu/abs kink
};

// Builds a scalar loss on the given graph from the parameters it reads.
using LossBuilder = std::function<Var(Graph&)>;

// Compares backward() gradients of every coordinate of `params` with central
// differences of step `eps`:
//   err = |analytic - numeric| / max(|analytic|, |numeric|, floor).
// Coordinates whose +eps and -eps evaluations differ in kink signature are
// skipped. Parameter values are restored on return.
GradCheckResult grad_check(const LossBuilder& build, const std::vector<Parameter*>& params,
                           double eps = 1e-5, double floor = 1e-8);

}  // namespace speakaug::nn

#endif  // SPEAKAUG_NN_GRAD_CHECK_H_
