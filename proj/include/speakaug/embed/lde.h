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

#ifndef SPEAKAUG_EMBED_LDE_H_
#define SPEAKAUG_EMBED_LDE_H_

#include "speakaug/nn/graph.h"

namespace speakaug::embed {

enum class Pooling { kMean, kMeanStd };

inline constexpr double kLdeEps = 1e-8;

// Learnable dictionary encoding over frames x [T, D] with component means
// mu [C, D] and positive scales s [C]:
//   w_tc = softmax_c(-s_c |x_t - mu_c|^2)
//   e_c  = sum_t w_tc (x_t - mu_c) / (sum_t w_tc + eps)
//   sd_c = sqrt(sum_t w_tc (x_t - mu_c - e_c)^2 / (sum_t w_tc + eps) + eps)
// Returns [1, C*D] = [e_1 .. e_C], or [1, 2*C*D] = [e_1 .. e_C, sd_1 .. sd_C].
nn::Var lde_pool(nn::Var x, nn::Var mu, nn::Var s, Pooling pooling);

// SphereFace-style logits with multiplicative angular margin m = 2 on the
// target class: columns of w [dim, K] are normalized, non-target logits are
// |x| cos(theta_j) and the target logit is
//   (lambda |x| cos(theta_y) + |x| psi(theta_y)) / (1 + lambda),
//   psi = (-1)^k cos(2 theta) - 2k for theta in [k pi/2, (k+1) pi/2].
nn::Var angular_margin_logits(nn::Var x, nn::Var w, const std::vector<int>& labels,
                              double lambda = 0.0);

}  // namespace speakaug::embed

#endif  // SPEAKAUG_EMBED_LDE_H_
