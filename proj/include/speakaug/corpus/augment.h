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

#ifndef SPEAKAUG_CORPUS_AUGMENT_H_
#define SPEAKAUG_CORPUS_AUGMENT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "speakaug/common/rng.h"
#include "speakaug/corpus/manifest.h"

namespace speakaug::corpus {

// "0.9" for 0.9, "1.1" for 1.1; used in augmented speaker and utterance ids.
std::string format_factor(double factor);

// Where augmented audio goes. Relative audio paths of the input manifest are
// resolved against `input_root`; outputs mirror them under
// `output_root`/x<factor>/. Audio is brought to 16 kHz before the speed change.
struct VtlpAudio {
  std::filesystem::path input_root;
  std::filesystem::path output_root;
  bool render = true;  // false only rewrites paths
};

// Adds one artificial speaker "<speaker>_x<factor>" per original speaker and
// factor, copying every utterance of the source speaker with the same split,
// dialect, corpus and text. Original records come first and are unchanged.
// `splits`, when non-empty, restricts which speakers are copied (Table-1 style
// augmentation leaves the test speakers alone).
Manifest vtlp_augment(const Manifest& m, const std::vector<double>& factors,
                      const VtlpAudio* audio = nullptr, const std::vector<Split>& splits = {});

// One-hot over the manifest's ordered corpus list.
std::vector<double> channel_onehot(const std::string& corpus_id,
                                   const std::vector<std::string>& corpus_list);

enum class BalanceKey { kDialect, kSpeaker };

// Endless stream of record-index batches drawn round-robin over the classes
// of `key`, each class cycling through its own reshuffled records. Any window
// of num_classes() consecutive batches then holds equal counts per class up to
// one batch boundary.
class BalancedBatcher {
 public:
  BalancedBatcher(const Manifest& m, BalanceKey key, int batch_size, uint64_t seed);

  std::vector<std::size_t> next();

  const std::vector<std::string>& classes() const { return classes_; }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  // Batches needed to cover the manifest once on average.
  std::size_t batches_per_epoch() const;
  // Class index of a record.
  int class_of(std::size_t record) const { return record_class_[record]; }

 private:
  std::size_t draw(int cls);

  int batch_size_;
  Rng rng_;
  std::vector<std::string> classes_;
  std::vector<int> record_class_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::size_t> cursor_;
  std::size_t turn_ = 0;
  std::size_t total_ = 0;
};

std::vector<std::vector<std::size_t>> balanced_batches(const Manifest& m, BalanceKey key,
                                                       int batch_size, uint64_t seed,
                                                       std::size_t n_batches);

}  // namespace speakaug::corpus

#endif  // SPEAKAUG_CORPUS_AUGMENT_H_
