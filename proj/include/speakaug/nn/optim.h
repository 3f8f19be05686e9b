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

#ifndef SPEAKAUG_NN_OPTIM_H_
#define SPEAKAUG_NN_OPTIM_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "speakaug/nn/tensor.h"

namespace speakaug::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

// One bias-corrected Adam update of `values` in place. `m` and `v` are the
// moment buffers; `t` is the 1-based step count. Non-finite gradients throw
// NumericError before anything is modified.
void adam_step(std::span<double> values, std::span<const double> grads,
               std::span<double> m, std::span<double> v, const AdamOptions& opt,
               long t);

// Adam over a ParamStore, with moment state keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamOptions opt = {}) : opt_(opt) {}

  void step(ParamStore& params);
  long steps() const { return t_; }
  const AdamOptions& options() const { return opt_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamOptions opt_;
  long t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace speakaug::nn

#endif  // SPEAKAUG_NN_OPTIM_H_
