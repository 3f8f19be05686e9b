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

#include "speakaug/corpus/features.h"

#include "speakaug/dsp/resample.h"
#include "speakaug/dsp/waveform.h"

namespace speakaug::corpus {

std::filesystem::path resolve_audio(const std::filesystem::path& root, const UtteranceRecord& r) {
  std::filesystem::path p(r.audio_path);
  return p.is_absolute() || root.empty() ? p : root / p;
}

dsp::MelSpectrogram load_record_mel(const std::filesystem::path& root, const UtteranceRecord& r) {
  dsp::Waveform w = dsp::read_wav(resolve_audio(root, r));
  if (w.sample_rate != dsp::kCanonicalRate) w = dsp::resample_rate(w, dsp::kCanonicalRate);
  return dsp::mel_spectrogram(w);
}

const dsp::MelSpectrogram& MelCache::get(const UtteranceRecord& r) {
  auto it = cache_.find(r.utt_id);
  if (it == cache_.end()) it = cache_.emplace(r.utt_id, load_record_mel(root_, r)).first;
  return it->second;
}

}  // namespace speakaug::corpus
