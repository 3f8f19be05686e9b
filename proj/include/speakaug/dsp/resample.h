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

#ifndef SPEAKAUG_DSP_RESAMPLE_H_
#define SPEAKAUG_DSP_RESAMPLE_H_

#include "speakaug/dsp/waveform.h"

namespace speakaug::dsp {

inline constexpr double kMinSpeedFactor = 0.5;
inline constexpr double kMaxSpeedFactor = 2.0;

// Sox-style `speed`: plays the signal `factor` times faster at the same sample
// rate, so pitch, formants and duration all scale together. Output length is
// round(N / factor).
Waveform resample_speed(const Waveform& wave, double factor);

// Sample-rate conversion preserving duration.
Waveform resample_rate(const Waveform& wave, int target_rate);

}  // namespace speakaug::dsp

#endif  // SPEAKAUG_DSP_RESAMPLE_H_
