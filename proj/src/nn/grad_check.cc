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

#include "speakaug/nn/grad_check.h"

#include <algorithm>
#include <cmath>

namespace speakaug::nn {
namespace {

struct Eval {
  double loss;
  std::vector<uint8_t> kinks;
};

Eval evaluate(const LossBuilder& build) {
  Graph g(false);
  Var loss = build(g);
  return {loss.value()[0], g.kink_signature()};
}

}  // namespace

GradCheckResult grad_check(const LossBuilder& build, const std::vector<Parameter*>& params,
                           double eps, double floor) {
  for (Parameter* p : params) p->grad = Tensor(p->value.shape);
  {
    Graph g(true);
    Var loss = build(g);
    g.backward(loss);
  }
  GradCheckResult result;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const Eval plus = evaluate(build);
      p->value[i] = orig - eps;
      const Eval minus = evaluate(build);
      p->value[i] = orig;
      if (plus.kinks != minus.kinks) {
        ++result.skipped;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2 * eps);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double err = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(err, result.max_rel_error);
        result.worst_param = p->name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace speakaug::nn
