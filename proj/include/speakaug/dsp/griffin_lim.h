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

#ifndef SPEAKAUG_DSP_GRIFFIN_LIM_H_
#define SPEAKAUG_DSP_GRIFFIN_LIM_H_

#include <cstdint>

#include "speakaug/dsp/mel.h"

namespace speakaug::dsp {

inline constexpr int kDefaultGriffinLimIterations = 60;

// Linear magnitude estimate from a log-mel spectrogram via the clipped
// pseudo-inverse of the filterbank. Rows are frames, columns FFT bins.
Matrix mel_to_linear_magnitude(const MelSpectrogram& mel);

// Random-phase inverse STFT of the magnitude estimate (no phase refinement).
Waveform random_phase_reconstruction(const MelSpectrogram& mel, uint64_t seed = 0);

// Griffin-Lim phase recovery; output is hop * (T - 1) samples at 16 kHz.
Waveform griffin_lim(const MelSpectrogram& mel,
                     int iterations = kDefaultGriffinLimIterations,
                     uint64_t seed = 0);

// Mean absolute difference between two log-mel matrices over their common
// frame range.
double mel_l1(const Matrix& a, const Matrix& b);

}  // namespace speakaug::dsp

#endif  // SPEAKAUG_DSP_GRIFFIN_LIM_H_
