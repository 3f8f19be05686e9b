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

#ifndef SPEAKAUG_CORPUS_FEATURES_H_
#define SPEAKAUG_CORPUS_FEATURES_H_

#include <filesystem>
#include <map>
#include <string>

#include "speakaug/corpus/manifest.h"
#include "speakaug/dsp/mel.h"

namespace speakaug::corpus {

// Absolute audio paths are used as is; relative ones are taken under `root`.
std::filesystem::path resolve_audio(const std::filesystem::path& root, const UtteranceRecord& r);

// Reads the record's WAV, converts it to 16 kHz if needed and analyses it.
dsp::MelSpectrogram load_record_mel(const std::filesystem::path& root, const UtteranceRecord& r);

// Memoizes load_record_mel by utt_id.
class MelCache {
 public:
  explicit MelCache(std::filesystem::path root) : root_(std::move(root)) {}
  const dsp::MelSpectrogram& get(const UtteranceRecord& r);
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::map<std::string, dsp::MelSpectrogram> cache_;
};

}  // namespace speakaug::corpus

#endif  // SPEAKAUG_CORPUS_FEATURES_H_
