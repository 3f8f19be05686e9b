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

#ifndef SPEAKAUG_CORPUS_TOY_H_
#define SPEAKAUG_CORPUS_TOY_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "speakaug/corpus/manifest.h"
#include "speakaug/dsp/waveform.h"

namespace speakaug::corpus {

// Synthetic corpus with controllable speaker, dialect and channel factors.
//   token   -> 5 frames of gliding formants on a harmonic source
//   speaker -> scales f0 and formant frequencies
//   dialect -> permutes the frame order of a subset of tokens
//   channel -> spectral tilt (dB/kHz) plus white noise
struct ToyConfig {
  uint64_t seed = 1;
  int n_speakers = 4;
  int n_dialects = 2;
  int n_channels = 2;
  int utts_per_speaker = 20;
  int min_tokens = 3;
  int max_tokens = 6;
};

inline constexpr int kToyFramesPerToken = 5;
inline constexpr int kToyEdgeFrames = 2;  // silent frames before and after

struct ToySpeaker {
  std::string id;
  double freq_scale = 1.0;
  double f0 = 110.0;
  int dialect = 0;
  int channel = 0;
  std::string gender;
};

struct ToyFrame {
  std::array<double, 3> formants{};
  double amplitude = 0.0;
};

const std::vector<std::string>& toy_vocab();
std::vector<std::string> toy_corpus_names(int n_channels);
std::vector<std::string> toy_dialect_names(int n_dialects);

// Speaker s has dialect s mod n_dialects and channel (s / n_dialects) mod
// n_channels. With 8 or more speakers the last two are held out as dev and
// test; smaller corpora are all train.
std::vector<ToySpeaker> toy_speakers(const ToyConfig& cfg);
std::vector<std::string> toy_texts(const ToyConfig& cfg);

double toy_channel_tilt_db_per_khz(int channel);
double toy_channel_noise_rms(int channel);

// Frame order of a token's template under a dialect.
std::array<int, kToyFramesPerToken> toy_dialect_order(int token, int dialect);
std::vector<ToyFrame> toy_frames(const std::vector<std::string>& tokens, int dialect);

// Renders at 16 kHz. The mel of the result has exactly
// 2 * kToyEdgeFrames + kToyFramesPerToken * tokens.size() frames.
dsp::Waveform render_toy_utterance(const std::vector<std::string>& tokens,
                                   const ToySpeaker& speaker, int dialect, int channel,
                                   uint64_t noise_seed);

// Writes <out_dir>/wav/<speaker>/<utt>.wav and <out_dir>/manifest.jsonl
// (audio paths relative to out_dir) and returns the manifest.
Manifest make_toy_corpus(const ToyConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace speakaug::corpus

#endif  // SPEAKAUG_CORPUS_TOY_H_
