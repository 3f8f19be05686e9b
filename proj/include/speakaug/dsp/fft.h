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

#ifndef SPEAKAUG_DSP_FFT_H_
#define SPEAKAUG_DSP_FFT_H_

#include <complex>
#include <cstddef>
#include <vector>

namespace speakaug::dsp {

// Iterative radix-2 FFT for a fixed power-of-two size. Immutable after
// construction, so one plan may be shared across threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  void forward(std::vector<std::complex<double>>& data) const;
  // Inverse transform including the 1/n scale.
  void inverse(std::vector<std::complex<double>>& data) const;

 private:
  void transform(std::vector<std::complex<double>>& data, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;
};

}  // namespace speakaug::dsp

#endif  // SPEAKAUG_DSP_FFT_H_
