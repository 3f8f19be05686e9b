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

#include "speakaug/nn/optim.h"

#include <cmath>
#include <string>

#include "speakaug/common/error.h"

namespace speakaug::nn {

void adam_step(std::span<double> values, std::span<const double> grads, std::span<double> m,
               std::span<double> v, const AdamOptions& opt, long t) {
  if (grads.size() != values.size() || m.size() != values.size() || v.size() != values.size()) {
    throw InvalidArgument("adam_step: buffer sizes differ");
  }
  if (t < 1) throw InvalidArgument("adam_step: step count starts at 1");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("non-finite gradient at index " + std::to_string(i));
    }
  }
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < values.size(); ++i) {
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grads[i];
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grads[i] * grads[i];
    const double mh = m[i] / c1;
    const double vh = v[i] / c2;
    values[i] -= opt.lr * mh / (std::sqrt(vh) + opt.eps);
  }
}

void Adam::step(ParamStore& params) {
  auto all = params.all();
  for (Parameter* p : all) {
    if (p->grad.size() != p->value.size()) p->grad = Tensor(p->value.shape);
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      if (!std::isfinite(p->grad[i])) {
        throw NumericError("non-finite gradient in " + p->name + " at index " + std::to_string(i));
      }
    }
  }
  double factor = 1.0;
  if (opt_.clip_norm > 0) {
    double sq = 0;
    for (Parameter* p : all)
      for (double g : p->grad.values) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > opt_.clip_norm) factor = opt_.clip_norm / norm;
  }
  ++t_;
  std::vector<double> scaled;
  for (Parameter* p : all) {
    Moments& st = state_[p->name];
    if (st.m.size() != p->value.size()) {
      st.m.assign(p->value.size(), 0.0);
      st.v.assign(p->value.size(), 0.0);
    }
    scaled = p->grad.values;
    if (factor != 1.0)
      for (double& g : scaled) g *= factor;
    adam_step(p->value.values, scaled, st.m, st.v, opt_, t_);
  }
}

}  // namespace speakaug::nn
