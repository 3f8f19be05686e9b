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

#ifndef SPEAKAUG_VERIFY_GRADIENT_SUITE_H_
#define SPEAKAUG_VERIFY_GRADIENT_SUITE_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace speakaug::verify {

struct GradCase {
  std::string name;
  double max_rel_error = 0.0;
  std::string worst;  // "param[index]"
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double seconds = 0.0;
};

struct GradSuite {
  std::vector<GradCase> cases;
  double seconds = 0.0;
  double max_rel_error() const;
  const GradCase* worst() const;
};

inline constexpr double kGradTolerance = 1e-4;

// Finite-difference checks of every differentiable op, the attention and
// pooling layers, and the full synthesizer loss on a 3-token, 6-frame
// example with all conditioning paths active. `progress` sees each case as
// it finishes.
GradSuite run_gradient_suite(uint64_t seed = 1, const std::function<void(const GradCase&)>& progress = {});

}  // namespace speakaug::verify

#endif  // SPEAKAUG_VERIFY_GRADIENT_SUITE_H_
