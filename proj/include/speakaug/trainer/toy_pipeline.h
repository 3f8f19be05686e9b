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

#ifndef SPEAKAUG_TRAINER_TOY_PIPELINE_H_
#define SPEAKAUG_TRAINER_TOY_PIPELINE_H_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "speakaug/corpus/toy.h"
#include "speakaug/embed/encoder.h"
#include "speakaug/synth/synth.h"
#include "speakaug/trainer/trainer.h"

namespace speakaug::trainer {

// Desk-scale settings for the four-phase schedule on a toy corpus.
struct ToySchedule {
  synth::SynthConfig synth;
  std::vector<PhasePlan> plans;
  embed::EmbeddingConfig dialect_config{32, embed::Pooling::kMean, 32};
  embed::EmbeddingConfig speaker_config{32, embed::Pooling::kMean, 32};
  embed::TrainOptions dialect_train;
  embed::TrainOptions speaker_train;
  std::string probe_utt;  // held-in utterance scored after phase 3
};

// Plans for `m`: phase 0 on the first speaker, later phases on all train
// records; dev loss on a thinned set of held-in train utterances.
ToySchedule toy_schedule(const corpus::Manifest& m, double step_scale = 1.0);

struct ToyRun {
  corpus::Manifest manifest;
  double dialect_accuracy = 0.0;
  double speaker_accuracy = 0.0;
  Lineage lineage;
  double schedule_seconds = 0.0;
  double total_seconds = 0.0;
  // Phase-3 model on the probe utterance.
  double probe_l1 = 0.0;
  double probe_focus = 0.0;
  double phase3_initial_dev = 0.0;
  double phase3_best_dev = 0.0;
};

// Generates the toy corpus in out_dir/corpus, trains both encoders, writes
// their checkpoints and the embedding tables, then runs the schedule into
// out_dir/schedule.
ToyRun run_toy_pipeline(const corpus::ToyConfig& cfg, const std::filesystem::path& out_dir,
                        const std::function<void(const std::string&)>& log = {}, double step_scale = 1.0);

}  // namespace speakaug::trainer

#endif  // SPEAKAUG_TRAINER_TOY_PIPELINE_H_
