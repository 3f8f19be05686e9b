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

#ifndef SPEAKAUG_DSP_WAVEFORM_H_
#define SPEAKAUG_DSP_WAVEFORM_H_

#include <filesystem>
#include <vector>

namespace speakaug::dsp {

// Canonical internal rate for analysis and synthesis.
inline constexpr int kCanonicalRate = 16000;

struct Waveform {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate = kCanonicalRate;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws InvalidArgument if a sample is non-finite or the rate is not positive.
void validate(const Waveform& wave);

// Mono 16-bit PCM RIFF/WAVE. Multi-channel input is rejected.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& wave);

// Serialized bytes of write_wav, for callers that stream the file.
std::string encode_wav(const Waveform& wave);

}  // namespace speakaug::dsp

#endif  // SPEAKAUG_DSP_WAVEFORM_H_
