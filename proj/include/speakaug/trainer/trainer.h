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

#ifndef SPEAKAUG_TRAINER_TRAINER_H_
#define SPEAKAUG_TRAINER_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "speakaug/corpus/features.h"
#include "speakaug/corpus/manifest.h"
#include "speakaug/embed/encoder.h"
#include "speakaug/synth/synth.h"

namespace speakaug::trainer {

struct OptimizerSettings {
  double lr = 1e-3;
  double clip_norm = 1.0;
  int batch_size = 4;
  int max_steps = 2000;
  uint64_t seed = 1;
};

struct Convergence {
  int patience = 3;
  double min_delta = 1e-4;
  int eval_every = 100;
  int min_steps = 0;  // no early stop before this many steps
};

struct PhasePlan {
  int phase = 0;
  corpus::RecordFilter data;
  corpus::RecordFilter dev_data{{}, {}, {corpus::Split::kDev}, ""};
  int dev_limit = 0;               // 0 keeps every dev record
  synth::Conditioning conditioning;
  std::optional<embed::EmbeddingConfig> dialect_config;
  OptimizerSettings optimizer;
  Convergence convergence;

  // phase 0: no conditioning; 1: speaker; 2: speaker + channel; 3: all three
  // and a dialect_config.
  void validate() const;
  nlohmann::json to_json() const;
  static PhasePlan from_json(const nlohmann::json& j);
};

struct DevPoint {
  int step = 0;
  double loss = 0.0;
};

struct PhasedCheckpoint {
  synth::SynthModel model;
  int phase = 0;
  std::optional<std::string> parent_hash;
  nlohmann::json config_snapshot;  // the plan that produced it
  std::vector<DevPoint> dev_history;
  double best_dev_loss = 0.0;
  int best_step = 0;
  std::optional<embed::EmbeddingConfig> dialect_config;
  std::string hash;  // content hash once saved or loaded

  nlohmann::json metadata() const;
  // Atomic write; sets and returns the content hash.
  std::string save(const std::filesystem::path& path);
  static PhasedCheckpoint load(const std::filesystem::path& path);
};

// Patience-based stopping on a stream of dev losses.
class EarlyStopper {
 public:
  EarlyStopper(int patience, double min_delta);
  // Records one evaluation; returns true when training should stop.
  bool update(double loss);
  bool improved() const { return improved_; }
  double best() const { return best_; }
  int bad_evals() const { return bad_; }

 private:
  int patience_;
  double min_delta_;
  double best_;
  int bad_ = 0;
  bool improved_ = false;
  bool seen_ = false;
};

// Frozen, precomputed conditioning embeddings.
struct EmbeddingTables {
  std::map<std::string, std::vector<double>> speaker;  // by speaker_id
  std::map<std::string, std::vector<double>> dialect;  // by dialect name
  std::vector<std::string> channels;                   // corpus list, one-hot order

  nlohmann::json to_json() const;
  static EmbeddingTables from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static EmbeddingTables load(const std::filesystem::path& path);
};

// Speaker table: normalized mean embedding over each speaker's records.
// Dialect table: normalized mean over each dialect's train records.
EmbeddingTables build_embedding_tables(const corpus::Manifest& m, corpus::MelCache& cache,
                                       const embed::Encoder* speaker_encoder,
                                       const embed::Encoder* dialect_encoder);

// Conditioners for one record, limited to the paths the model has.
synth::Conditioners conditioners_for(const corpus::UtteranceRecord& r, const corpus::Manifest& m,
                                     const synth::SynthModel& model, const EmbeddingTables& tables);

std::vector<synth::SynthExample> make_examples(const corpus::Manifest& subset, const corpus::Manifest& full,
                                               corpus::MelCache& cache, const synth::SynthModel& model,
                                               const EmbeddingTables& tables);

// Adds one conditioning path with zero-initialized parameters.
enum class Extension { kSpeaker, kChannel, kDialect };
PhasedCheckpoint warm_start_extend(const PhasedCheckpoint& ckpt, Extension ext);

struct PhaseInputs {
  const corpus::Manifest* manifest = nullptr;
  corpus::MelCache* cache = nullptr;
  const EmbeddingTables* tables = nullptr;
  const synth::SynthConfig* synth_config = nullptr;  // phase 0 only
  std::function<void(const std::string&)> log;
};

// Trains one phase from `init` (absent for phase 0) with the teacher-forced
// loss, evaluating dev loss every eval_every steps, and returns the best
// checkpoint seen (step 0 included).
PhasedCheckpoint run_phase(const PhasePlan& plan, const PhasedCheckpoint* init, const PhaseInputs& in);

struct LineageEntry {
  int phase = 0;
  std::string hash;
  std::optional<std::string> parent_hash;
  std::string checkpoint;  // file name relative to the lineage directory
  std::string config;      // plan file name
  double best_dev_loss = 0.0;
  int best_step = 0;
  double seconds = 0.0;
};

struct Lineage {
  std::vector<LineageEntry> entries;
  nlohmann::json to_json() const;
  static Lineage from_json(const nlohmann::json& j);
};

// Runs plans 0..3 in order, saving phase<k>.ckpt, phase<k>.plan.json and an
// updated lineage.json in out_dir after every phase. A failing phase leaves
// the lineage of the completed ones in place.
Lineage run_schedule(const std::vector<PhasePlan>& plans, const PhaseInputs& in,
                     const std::filesystem::path& out_dir);

// Checks that each checkpoint file hashes to its entry and to the next
// entry's parent hash, and that the chain starts at a phase-0 checkpoint.
void validate_lineage(const std::filesystem::path& dir);

std::vector<PhasePlan> load_plans(const std::filesystem::path& path);
void save_plans(const std::filesystem::path& path, const std::vector<PhasePlan>& plans);

}  // namespace speakaug::trainer

#endif  // SPEAKAUG_TRAINER_TRAINER_H_
