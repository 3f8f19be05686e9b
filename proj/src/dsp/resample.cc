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

#include "speakaug/dsp/resample.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "speakaug/common/error.h"

namespace speakaug::dsp {
namespace {

// Half-width of the windowed-sinc kernel, in zero crossings.
constexpr int kNumZeros = 16;
// Fraction of the output Nyquist kept by the anti-alias filter.
constexpr double kRolloff = 0.95;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Band-limited interpolation: output sample j is read at input position
// j * step with a Hann-windowed sinc of bandwidth `cutoff` (fraction of the
// input Nyquist).
std::vector<double> sinc_interpolate(const std::vector<double>& x, double step,
                                     std::size_t out_len, double cutoff) {
  const double half_width = kNumZeros / cutoff;
  const auto n = static_cast<long>(x.size());
  std::vector<double> y(out_len, 0.0);
  for (std::size_t j = 0; j < out_len; ++j) {
    const double t = static_cast<double>(j) * step;
    const long lo = std::max<long>(0, static_cast<long>(std::ceil(t - half_width)));
    const long hi = std::min<long>(n - 1, static_cast<long>(std::floor(t + half_width)));
    double acc = 0.0;
    for (long i = lo; i <= hi; ++i) {
      const double tau = t - static_cast<double>(i);
      const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * tau / half_width));
      acc += x[static_cast<std::size_t>(i)] * cutoff * sinc(cutoff * tau) * window;
    }
    y[j] = acc;
  }
  return y;
}

}  // namespace

Waveform resample_speed(const Waveform& wave, double factor) {
  if (!(factor >= kMinSpeedFactor && factor <= kMaxSpeedFactor)) {
    throw InvalidArgument("speed factor must lie in [0.5, 2.0], got " +
                          std::to_string(factor));
  }
  if (wave.samples.empty()) throw InvalidArgument("resample_speed: empty waveform");
  validate(wave);
  if (factor == 1.0) return wave;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(wave.size()) / factor));
  const double cutoff = kRolloff * std::min(1.0, 1.0 / factor);
  return Waveform{sinc_interpolate(wave.samples, factor, out_len, cutoff),
                  wave.sample_rate};
}

Waveform resample_rate(const Waveform& wave, int target_rate) {
  if (target_rate <= 0) {
    throw InvalidArgument("target_rate must be positive, got " +
                          std::to_string(target_rate));
  }
  validate(wave);
  if (target_rate == wave.sample_rate) return wave;
  const double ratio = static_cast<double>(target_rate) / wave.sample_rate;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(wave.size()) * ratio));
  const double cutoff = kRolloff * std::min(1.0, ratio);
  return Waveform{sinc_interpolate(wave.samples, 1.0 / ratio, out_len, cutoff),
                  target_rate};
}

}  // namespace speakaug::dsp
